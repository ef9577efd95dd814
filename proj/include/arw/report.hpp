#ifndef ARW_REPORT_HPP
#define ARW_REPORT_HPP

#include <cstdint>
#include <string>

#include "json.hpp"

namespace arw {

constexpr const char* kToolVersion = "arw 0.1.0";

std::string iso8601_now();

void write_text_file(const std::string& path, const std::string& content);

// Manifest skeleton shared by every command; the caller fills "params".
nlohmann::json make_manifest(const std::string& command_line,
                             std::uint64_t master_seed);

} // namespace arw

#endif
