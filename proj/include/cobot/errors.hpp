#ifndef COBOT_ERRORS_HPP
#define COBOT_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace cobot {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class LimitViolation : public Error { public: using Error::Error; };
class Unreachable : public Error { public: using Error::Error; };
class Infeasible : public Error { public: using Error::Error; };
class OutOfRange : public Error { public: using Error::Error; };
class DegeneratePlan : public Error { public: using Error::Error; };
class ConfigError : public Error { public: using Error::Error; };
class IoError : public Error { public: using Error::Error; };

class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line = 0) : Error(what), line_(line) {}
  /// 1-based line number within a log, 0 when not applicable.
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

class VersionError : public ParseError { public: using ParseError::ParseError; };
class UnknownTag : public ParseError { public: using ParseError::ParseError; };

}  // namespace cobot

#endif  // COBOT_ERRORS_HPP
