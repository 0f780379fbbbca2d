#pragma once

#include <istream>
#include <string>

#include "lsm/types.hpp"

namespace lsm::io {

inline void expect_token(std::istream& is, const std::string& token) {
  std::string got;
  is >> got;
  if (got != token) throw ConfigError("expected '" + token + "' but found '" + got + "'");
}

}  // namespace lsm::io
