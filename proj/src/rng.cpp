#include "wrvi/util/rng.hpp"

#include <cmath>
#include <sstream>

#include "wrvi/common.hpp"

namespace wrvi {

std::string RandomStream::serialize() const {
  std::ostringstream os;
  os << engine_;
  return os.str();
}

RandomStream RandomStream::deserialize(const std::string& text) {
  RandomStream rs(0);
  std::istringstream is(text);
  is >> rs.engine_;
  if (is.fail()) throw ConfigError("RandomStream: malformed serialized engine state");
  return rs;
}

}  // namespace wrvi
