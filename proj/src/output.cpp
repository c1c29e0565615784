#include "output.hpp"

#include <fmt/format.h>

namespace ensval::output {

std::string exact(double v) { return fmt::format("{:.17g}", v); }

std::string rounded(double v) { return fmt::format("{:.6f}", v); }

std::string join(std::span<const double> values, char sep)
{
    std::string out;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i) out += sep;
        out += exact(values[i]);
    }
    return out;
}

std::string escape_json(std::string_view s)
{
    std::string out;
    out.reserve(s.size() + 2);
    for (char ch : s) {
        switch (ch) {
        case '"': out += "\\\""; break;
        case '\\': out += "\\\\"; break;
        case '\n': out += "\\n"; break;
        case '\t': out += "\\t"; break;
        case '\r': out += "\\r"; break;
        default:
            if (static_cast<unsigned char>(ch) < 0x20)
                out += fmt::format("\\u{:04x}", static_cast<int>(ch));
            else
                out += ch;
        }
    }
    return out;
}

void JsonWriter::separate()
{
    if (after_key_) {
        after_key_ = false;
        return;
    }
    if (!first_.empty()) {
        if (!first_.back()) out_ << ',';
        first_.back() = false;
    }
}

JsonWriter& JsonWriter::begin_object()
{
    separate();
    out_ << '{';
    first_.push_back(true);
    return *this;
}

JsonWriter& JsonWriter::end_object()
{
    first_.pop_back();
    out_ << '}';
    return *this;
}

JsonWriter& JsonWriter::begin_array()
{
    separate();
    out_ << '[';
    first_.push_back(true);
    return *this;
}

JsonWriter& JsonWriter::end_array()
{
    first_.pop_back();
    out_ << ']';
    return *this;
}

JsonWriter& JsonWriter::key(std::string_view k)
{
    separate();
    out_ << '"' << escape_json(k) << "\":";
    after_key_ = true;
    return *this;
}

JsonWriter& JsonWriter::value(double v)
{
    separate();
    out_ << exact(v);
    return *this;
}

JsonWriter& JsonWriter::value(std::int64_t v)
{
    separate();
    out_ << v;
    return *this;
}

JsonWriter& JsonWriter::value(std::uint64_t v)
{
    separate();
    out_ << v;
    return *this;
}

JsonWriter& JsonWriter::value(bool v)
{
    separate();
    out_ << (v ? "true" : "false");
    return *this;
}

JsonWriter& JsonWriter::value(std::string_view v)
{
    separate();
    out_ << '"' << escape_json(v) << '"';
    return *this;
}

JsonWriter& JsonWriter::value(std::span<const double> v)
{
    begin_array();
    for (double x : v) value(x);
    return end_array();
}

}  // namespace ensval::output
