// Serialization helpers for the command-line front end.
//
// Machine formats carry 17 significant digits so every double survives a
// text round trip bit for bit.

#pragma once

#include <cstdint>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace ensval::output {

std::string exact(double v);   // 17 significant digits
std::string rounded(double v); // 6 decimal places

std::string join(std::span<const double> values, char sep);

/// Minimal streaming JSON writer; keys are emitted in call order.
class JsonWriter
{
  public:
    explicit JsonWriter(std::ostream& out) : out_(out) {}

    JsonWriter& begin_object();
    JsonWriter& end_object();
    JsonWriter& begin_array();
    JsonWriter& end_array();
    JsonWriter& key(std::string_view k);

    JsonWriter& value(double v);
    JsonWriter& value(std::int64_t v);
    JsonWriter& value(std::uint64_t v);
    JsonWriter& value(bool v);
    JsonWriter& value(std::string_view v);
    JsonWriter& value(const char* v) { return value(std::string_view{v}); }
    JsonWriter& value(std::span<const double> v);

    template <typename T>
    JsonWriter& field(std::string_view k, const T& v)
    {
        key(k);
        return value(v);
    }

  private:
    void separate();

    std::ostream& out_;
    std::vector<bool> first_;
    bool after_key_ = false;
};

std::string escape_json(std::string_view s);

}  // namespace ensval::output
