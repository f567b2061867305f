#ifndef RBK_ERRORS_HPP
#define RBK_ERRORS_HPP

#include <stdexcept>
#include <string>
#include <vector>

namespace rbk {

class Error : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

/// Argument outside the mathematical domain of an operation.
class DomainError : public Error
{
public:
    using Error::Error;
};

/// Invalid run configuration. Carries every violation found, not just the first.
class ConfigError : public Error
{
public:
    explicit ConfigError(std::vector<std::string> violations);
    explicit ConfigError(const std::string& violation)
        : ConfigError(std::vector<std::string>{violation}) {}

    const std::vector<std::string>& violations() const noexcept { return violations_; }

private:
    std::vector<std::string> violations_;
};

/// Time integration could not proceed (positivity could not be restored by step halving).
class NumericError : public Error
{
public:
    using Error::Error;
};

inline ConfigError::ConfigError(std::vector<std::string> violations)
    : Error([&] {
          std::string msg;
          for (const auto& v : violations) {
              if (!msg.empty())
                  msg += '\n';
              msg += v;
          }
          return msg;
      }()),
      violations_(std::move(violations))
{
}

} // namespace rbk

#endif
