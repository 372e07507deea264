#pragma once

#include <cstdio>
#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "sentiscope/error.hpp"

namespace sentiscope::csv {

inline bool needs_quotes(std::string_view field) {
    return field.find_first_of(",\"\r\n") != std::string_view::npos;
}

inline std::string quote(std::string_view field) {
    if (!needs_quotes(field)) return std::string(field);
    std::string out;
    out.reserve(field.size() + 2);
    out += '"';
    for (char c : field) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

/// Ten significant digits, `%g` style.
inline std::string number(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

template <typename Range>
void write_row(std::ostream& os, const Range& fields) {
    bool first = true;
    for (const auto& f : fields) {
        if (!first) os << ',';
        os << quote(f);
        first = false;
    }
    os << '\n';
}

/// RFC 4180 reader: quoted fields may contain separators, doubled quotes and newlines.
class Reader {
public:
    Reader(std::istream& in, std::string source) : in_(in), source_(std::move(source)) {}

    std::optional<std::vector<std::string>> next() {
        std::vector<std::string> row;
        std::string field;
        bool quoted = false, any = false, after_quote = false;
        int ch;
        ++line_;
        while ((ch = in_.get()) != EOF) {
            any = true;
            char c = static_cast<char>(ch);
            if (quoted) {
                if (c == '"') {
                    if (in_.peek() == '"') {
                        in_.get();
                        field += '"';
                    } else {
                        quoted = false;
                        after_quote = true;
                    }
                } else {
                    if (c == '\n') ++line_;
                    field += c;
                }
                continue;
            }
            if (c == ',') {
                row.push_back(std::move(field));
                field.clear();
                after_quote = false;
            } else if (c == '\n') {
                row.push_back(std::move(field));
                return strip_cr(std::move(row));
            } else if (c == '"' && field.empty() && !after_quote) {
                quoted = true;
            } else {
                field += c;
            }
        }
        if (quoted) throw ParseError(source_, line_, "unterminated quoted field");
        if (!any) return std::nullopt;
        row.push_back(std::move(field));
        return strip_cr(std::move(row));
    }

    std::size_t line() const { return line_; }
    const std::string& source() const { return source_; }

private:
    static std::vector<std::string> strip_cr(std::vector<std::string> row) {
        if (!row.empty() && !row.back().empty() && row.back().back() == '\r') row.back().pop_back();
        return row;
    }

    std::istream& in_;
    std::string source_;
    std::size_t line_ = 0;
};

/// Index of a named column in a header row, or a ParseError naming the missing column.
inline std::size_t column(const std::vector<std::string>& header, std::string_view name, const Reader& r) {
    for (std::size_t i = 0; i < header.size(); ++i)
        if (header[i] == name) return i;
    throw ParseError(r.source(), 1, "missing column '" + std::string(name) + "'");
}

}  // namespace sentiscope::csv
