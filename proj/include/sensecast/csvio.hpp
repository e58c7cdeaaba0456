#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace sensecast {

// Shortest round-trip decimal form of a double (std::to_chars). Values written
// with this function re-parse to the identical bit pattern, which the feature
// and trace exports rely on.
std::string format_double(double v);

// Strict parse of a full numeric field; throws StructuralError on garbage.
double parse_double_field(const std::string& field, const std::string& context);
std::int64_t parse_int_field(const std::string& field, const std::string& context);

// Splits a CSV line on ','. No quoting support: the toolkit's formats never
// quote fields. Trailing '\r' on the line is stripped before splitting.
std::vector<std::string> split_csv_line(const std::string& line);

// Reads all lines of a text file; throws StructuralError if unreadable.
std::vector<std::string> read_lines(const std::filesystem::path& path);

// Writes a file atomically: content goes to "<path>.tmp" first, then the
// temp file is renamed over the destination.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

// FNV-1a over the file bytes; used for the self-describing inputs manifest
// every command writes next to its results.
std::uint64_t fnv1a64_file(const std::filesystem::path& path);
std::uint64_t fnv1a64(const void* data, std::size_t n);

}  // namespace sensecast
