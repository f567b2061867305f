#ifndef RBK_NUMBER_FORMAT_HPP
#define RBK_NUMBER_FORMAT_HPP

#include <charconv>
#include <string>

namespace rbk::detail {

/// Shortest decimal text that reads back as exactly v.
inline std::string shortest(double v)
{
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

} // namespace rbk::detail

#endif
