#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace retractlab {

// shortest round-trip-exact decimal form used by every artifact writer
std::string format_double(double v);

// "retractlab-report v1" banner with the experiment name and config hash;
// byte-stable: no timestamps, hostnames or paths
std::string report_preamble(const std::string& experiment, std::uint64_t config_hash);

// CSV assembly with a mandatory header row
class CsvBuilder {
public:
    explicit CsvBuilder(std::vector<std::string> header);
    void add_row(const std::vector<std::string>& cells);
    std::string str() const { return body_; }

private:
    std::size_t columns_;
    std::string body_;
};

// creates parent directories, writes atomically-enough for batch use
// (full content in one stream); throws std::runtime_error on I/O failure
void write_text_file(const std::string& path, const std::string& content);

}  // namespace retractlab
