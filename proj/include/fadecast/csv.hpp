#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace fadecast::csv {

// RFC-4180-ish: fields containing comma, quote or newline are quoted.
// Numeric parsing is locale-independent ('.' decimal separator only).

std::vector<std::string> split_line(const std::string& line);

std::string quote_field(const std::string& field);

// Round-trippable double formatting, deterministic across runs.
std::string format_double(double v);

double parse_double(const std::string& field, const std::string& context);

struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    // Index of a header column, or nullopt.
    std::optional<std::size_t> column(const std::string& name) const;
};

Table read_file(const std::filesystem::path& path);

void write_file(const std::filesystem::path& path, const Table& table);

class Writer {
public:
    explicit Writer(const std::filesystem::path& path);
    ~Writer();
    Writer(const Writer&) = delete;
    Writer& operator=(const Writer&) = delete;

    void row(const std::vector<std::string>& fields);

private:
    struct Impl;
    Impl* impl_;
};

} // namespace fadecast::csv
