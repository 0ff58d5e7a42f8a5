#pragma once

#include <iosfwd>
#include <string>

#include "semidial/dialogue.hpp"

namespace semidial {

// Line-oriented REPL over a DialogueSession. Each user line is echoed as
// "USR: ...", answered with "SYS: ..." and, with show_state, followed by a
// "BS: <json>" belief dump. ":reset" starts a new dialogue, ":quit" ends.
class ChatSession {
 public:
  ChatSession(Network& net, const EntityDB& db, bool show_state);

  // Handles one input line and returns the transcript lines it produced.
  // Sets done() after ":quit".
  std::string handle(const std::string& line);
  bool done() const { return done_; }
  std::size_t turns() const { return turns_; }
  const BeliefState& belief() const { return session_.belief(); }

  // Reads until EOF or ":quit". Returns the number of user turns processed.
  std::size_t run(std::istream& in, std::ostream& out);

 private:
  Network& net_;
  DialogueSession session_;
  bool show_state_;
  bool done_ = false;
  std::size_t turns_ = 0;
};

}  // namespace semidial
