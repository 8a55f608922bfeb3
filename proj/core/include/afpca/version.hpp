#pragma once

namespace afpca {

constexpr const char* version() { return "0.1.0"; }

}  // namespace afpca
