#pragma once

#include <istream>
#include <string>
#include <string_view>
#include <vector>

namespace mllmsent::csv {

// Minimal RFC 4180 reader: quoted fields, doubled quotes, CRLF tolerated.
class Reader {
public:
    explicit Reader(std::istream& in, char delimiter = ',') : in_(in), delim_(delimiter) {}

    /// Reads the next logical row. Returns false at end of input.
    bool next(std::vector<std::string>& fields);

    /// 1-based line number where the last returned row started.
    std::size_t line() const noexcept { return row_line_; }

private:
    std::istream& in_;
    char delim_;
    std::size_t line_ = 0;
    std::size_t row_line_ = 0;
};

std::string trim(std::string_view s);

}  // namespace mllmsent::csv
