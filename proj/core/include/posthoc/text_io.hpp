#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace posthoc {

// Shortest decimal representation that round-trips the exact double value.
// Used for every number we write, so repeated runs are byte-identical.
std::string format_double(double value);

std::string read_text_file(const std::filesystem::path& path);

// Writes content atomically enough for our purposes (truncate + write).
// Throws std::runtime_error on I/O failure.
void write_text_file(const std::filesystem::path& path,
                     const std::string& content);

// CSV with a fixed header; cells are preformatted strings. No quoting is
// performed, callers must not pass cells containing commas or newlines.
std::string to_csv(const std::vector<std::string>& header,
                   const std::vector<std::vector<std::string>>& rows);

// FNV-1a 64-bit digest, rendered as 16 hex digits. Cheap content fingerprint
// for run manifests, not a cryptographic hash.
std::uint64_t fnv1a64(const std::string& bytes);
std::string fnv1a64_hex(const std::string& bytes);

}  // namespace posthoc
