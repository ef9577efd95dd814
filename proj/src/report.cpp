#include "arw/report.hpp"

#include <chrono>
#include <ctime>
#include <fstream>

#include "arw/types.hpp"

namespace arw {

std::string iso8601_now() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot open " + path + " for writing");
    out << content;
    if (!out) throw Error("failed writing " + path);
}

nlohmann::json make_manifest(const std::string& command_line,
                             std::uint64_t master_seed) {
    return nlohmann::json{
        {"tool", kToolVersion},
        {"command", command_line},
        {"master_seed", master_seed},
        {"started", iso8601_now()},
    };
}

} // namespace arw
