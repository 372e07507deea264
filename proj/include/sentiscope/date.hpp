#pragma once

#include <charconv>
#include <chrono>
#include <compare>
#include <cstdio>
#include <optional>
#include <string>
#include <string_view>

#include "sentiscope/error.hpp"

namespace sentiscope {

/// A UTC calendar day.
class Date {
public:
    constexpr Date() = default;
    constexpr explicit Date(std::chrono::sys_days day) : day_(day) {}
    constexpr Date(int y, unsigned m, unsigned d)
        : day_(std::chrono::year_month_day{std::chrono::year{y}, std::chrono::month{m}, std::chrono::day{d}}) {}

    /// Parses "YYYY-MM-DD". Anything else (including impossible dates) is rejected.
    static std::optional<Date> try_parse(std::string_view iso) {
        if (iso.size() != 10 || iso[4] != '-' || iso[7] != '-') return std::nullopt;
        int y = 0;
        unsigned m = 0, d = 0;
        auto num = [&](std::string_view part, auto& out) {
            auto [p, ec] = std::from_chars(part.data(), part.data() + part.size(), out);
            return ec == std::errc{} && p == part.data() + part.size();
        };
        if (!num(iso.substr(0, 4), y) || !num(iso.substr(5, 2), m) || !num(iso.substr(8, 2), d)) return std::nullopt;
        std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{m}, std::chrono::day{d}};
        if (!ymd.ok()) return std::nullopt;
        return Date{std::chrono::sys_days{ymd}};
    }

    static Date parse(std::string_view iso) {
        if (auto d = try_parse(iso)) return *d;
        throw Error("invalid date '" + std::string(iso) + "' (expected YYYY-MM-DD)");
    }

    std::string iso() const {
        std::chrono::year_month_day ymd{day_};
        char buf[16];
        std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", int(ymd.year()), unsigned(ymd.month()), unsigned(ymd.day()));
        return buf;
    }

    constexpr std::chrono::sys_days days() const { return day_; }

    constexpr Date operator+(long n) const { return Date{day_ + std::chrono::days{n}}; }
    constexpr Date operator-(long n) const { return Date{day_ - std::chrono::days{n}}; }
    /// Signed distance in days.
    friend constexpr long operator-(Date a, Date b) { return (a.day_ - b.day_).count(); }

    friend constexpr auto operator<=>(const Date&, const Date&) = default;

private:
    std::chrono::sys_days day_{};
};

/// Closed interval of days.
struct DateRange {
    Date from;
    Date to;

    constexpr bool contains(Date d) const { return from <= d && d <= to; }
    constexpr long length() const { return (to - from) + 1; }
};

}  // namespace sentiscope
