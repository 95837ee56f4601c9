#pragma once

#include <array>
#include <string_view>

namespace pshield::detail {

struct TemplateBankText {
  std::string_view version;
  std::string_view benign;
  std::string_view malicious;
  std::string_view fillers;
};

extern const std::array<TemplateBankText, 1> kTemplateBanks;

}  // namespace pshield::detail
