#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace stainpipe {

// FNV-1a 64-bit hash, used for content checksums and task signatures.
std::uint64_t fnv1a64(const void* data, std::size_t size);
std::uint64_t fnv1a64(const std::string& text);
std::uint64_t fnv1a64_file(const std::string& path);

// Lowercase 16-digit hex rendering of a checksum.
std::string hex64(std::uint64_t value);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);
void ensure_parent_dir(const std::string& path);

// Shortest-roundtrip decimal rendering of a double; "inf"/"-inf"/"nan" for
// the non-finite values. Used everywhere a number enters a report so reruns
// are byte-identical.
std::string format_double(double value);

// One CSV row; fields containing commas/quotes/newlines are quoted.
std::string csv_row(const std::vector<std::string>& fields);

}  // namespace stainpipe
