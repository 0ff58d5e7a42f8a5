#include "semidial/chat.hpp"

#include <istream>
#include <ostream>
#include <sstream>

#include "semidial/belief.hpp"

namespace semidial {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  return s.substr(b, s.find_last_not_of(" \t\r\n") - b + 1);
}

}  // namespace

ChatSession::ChatSession(Network& net, const EntityDB& db, bool show_state)
    : net_(net), session_(net, db), show_state_(show_state) {}

std::string ChatSession::handle(const std::string& raw) {
  const std::string line = trim(raw);
  std::ostringstream out;
  if (line.empty() || done_) return {};
  if (line == ":quit") {
    done_ = true;
    return {};
  }
  if (line == ":reset") {
    session_.reset();
    out << "SYS: (new dialogue)\n";
    if (show_state_) {
      out << "BS: " << belief_to_json(session_.belief(), net_.ontology()).dump() << '\n';
    }
    return out.str();
  }

  const auto tokens = tokenize(line);
  const auto ids = net_.vocab().encode(tokens);
  out << "USR: " << join_tokens(tokens) << '\n';
  if (ids.empty()) {
    out << "SYS: (empty utterance ignored)\n";
    return out.str();
  }
  TurnOutput turn = session_.step(ids);
  ++turns_;
  if (turn.lexicalization_failed || !turn.response.lexicalized) {
    std::vector<std::string> body = turn.response.delex_tokens;
    if (!body.empty() && body.back() == Vocab::kEosToken) body.pop_back();
    out << "SYS: " << join_tokens(body) << '\n';
    out << "warning: could not fill the response placeholders from the database\n";
  } else {
    out << "SYS: " << join_tokens(*turn.response.lexicalized) << '\n';
  }
  if (show_state_) {
    out << "BS: " << belief_to_json(turn.belief, net_.ontology()).dump() << '\n';
  }
  return out.str();
}

std::size_t ChatSession::run(std::istream& in, std::ostream& out) {
  std::string line;
  while (!done_ && std::getline(in, line)) {
    out << handle(line) << std::flush;
  }
  return turns_;
}

}  // namespace semidial
