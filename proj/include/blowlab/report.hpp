#ifndef BLOWLAB_REPORT_HPP
#define BLOWLAB_REPORT_HPP

#include <iosfwd>
#include <string>
#include <vector>

namespace blowlab {

/// Locale-independent rendering with 17 significant digits (round-trip safe).
std::string format_double(double value);

/// A rectangular table rendered both as CSV and as an aligned text block.
class Table {
public:
    explicit Table(std::vector<std::string> header);

    void add_row(std::vector<std::string> cells);
    std::size_t n_rows() const { return rows_.size(); }

    void write_csv(std::ostream& os) const;
    void write_text(std::ostream& os) const;

private:
    std::vector<std::string> header_;
    std::vector<std::vector<std::string>> rows_;
};

}  // namespace blowlab

#endif
