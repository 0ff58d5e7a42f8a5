#include <doctest.h>

#include <sstream>

#include "semidial/chat.hpp"
#include "support.hpp"

using namespace semidial;

namespace {

struct Fixture {
  ToyData data = generate_toy_corpus(testing::small_toy(10, 2));
  Network net{data.corpus.ontology(), data.corpus.vocab(), testing::tiny_model(), 3};
};

std::string transcript(Fixture& f, const std::string& input, bool show_state) {
  ChatSession chat(f.net, f.data.db, show_state);
  std::istringstream in(input);
  std::ostringstream out;
  chat.run(in, out);
  return out.str();
}

}  // namespace

TEST_CASE("quitting before any turn produces no output") {
  Fixture f;
  ChatSession chat(f.net, f.data.db, true);
  std::istringstream in(":quit\ni want a cheap hotel\n");
  std::ostringstream out;
  CHECK(chat.run(in, out) == 0);
  CHECK(out.str().empty());
  CHECK(chat.done());
  CHECK(chat.belief() == initial_belief(f.net.ontology()));
}

TEST_CASE("each user line gets a response and a belief dump") {
  Fixture f;
  ChatSession chat(f.net, f.data.db, true);
  const std::string out = chat.handle("I want a cheap hotel in the north.");
  CHECK(out.rfind("USR: i want a cheap hotel in the north .\nSYS: ", 0) == 0);
  CHECK(out.find("\nBS: {") != std::string::npos);
  CHECK(chat.turns() == 1);
  CHECK(chat.handle("   ").empty());
  CHECK(chat.turns() == 1);

  ChatSession quiet(f.net, f.data.db, false);
  CHECK(quiet.handle("hello").find("BS:") == std::string::npos);
}

TEST_CASE("reset restores the initial belief") {
  Fixture f;
  ChatSession chat(f.net, f.data.db, true);
  chat.handle("i want a cheap hotel");
  chat.handle("in the north please");
  const std::string out = chat.handle(":reset");
  CHECK(out.rfind("SYS: (new dialogue)\nBS: ", 0) == 0);
  CHECK(chat.belief() == initial_belief(f.net.ontology()));
}

TEST_CASE("replaying a transcript gives identical output") {
  Fixture f;
  const std::string input = "i want a cheap hotel\nwhat is the phone number ?\n:reset\nan italian restaurant\n:quit\n";
  const std::string a = transcript(f, input, true);
  const std::string b = transcript(f, input, true);
  CHECK(a == b);
  CHECK(a.find("SYS: (new dialogue)") != std::string::npos);
  // After the reset the dialogue restarts, so the last turn answers as a first turn would.
  const std::string fresh = transcript(f, "an italian restaurant\n", true);
  CHECK(a.substr(a.size() - fresh.size()) == fresh);
}
