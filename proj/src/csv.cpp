#include "mllmsent/csv.hpp"

#include "mllmsent/error.hpp"

namespace mllmsent::csv {

bool Reader::next(std::vector<std::string>& fields) {
    fields.clear();
    std::string raw;
    while (true) {
        if (!std::getline(in_, raw)) return false;
        ++line_;
        if (!raw.empty() && raw.back() == '\r') raw.pop_back();
        if (!raw.empty()) break;
    }
    row_line_ = line_;
    if (row_line_ == 1 && raw.starts_with("\xEF\xBB\xBF")) raw.erase(0, 3);

    std::string field;
    bool quoted = false;
    std::size_t i = 0;
    while (true) {
        if (i == raw.size()) {
            if (!quoted) break;
            // quoted field spanning lines
            std::string more;
            if (!std::getline(in_, more)) {
                throw SchemaMismatch("unterminated quoted field starting at line " +
                                     std::to_string(row_line_));
            }
            ++line_;
            if (!more.empty() && more.back() == '\r') more.pop_back();
            field += '\n';
            raw = std::move(more);
            i = 0;
            continue;
        }
        char c = raw[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < raw.size() && raw[i + 1] == '"') {
                    field += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                field += c;
            }
        } else if (c == '"' && field.empty()) {
            quoted = true;
        } else if (c == delim_) {
            fields.push_back(std::move(field));
            field.clear();
        } else {
            field += c;
        }
        ++i;
    }
    fields.push_back(std::move(field));
    return true;
}

std::string trim(std::string_view s) {
    const auto* ws = " \t\r\n";
    auto b = s.find_first_not_of(ws);
    if (b == std::string_view::npos) return {};
    auto e = s.find_last_not_of(ws);
    return std::string(s.substr(b, e - b + 1));
}

}  // namespace mllmsent::csv
