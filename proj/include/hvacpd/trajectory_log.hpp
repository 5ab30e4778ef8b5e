#pragma once

#include "hvacpd/linalg.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace hvacpd {

/// Dimensions that fix the column layout of a coupled-run log.
struct LogSchema {
    int n1 = 0;
    int n2 = 0;
    int c = 0;

    int n() const { return n1 + n2; }
    std::vector<std::string> columns() const;
};

/// Dense row-major table of named double columns.
///
/// Row k holds the state at t_k together with the signals resolved at t_k,
/// which are the inputs held over [t_k, t_{k+1}].
class TrajectoryLog {
public:
    TrajectoryLog() = default;
    explicit TrajectoryLog(LogSchema schema);

    const LogSchema& schema() const { return schema_; }
    const std::vector<std::string>& columns() const { return columns_; }
    std::size_t rows() const { return ncols_ ? data_.size() / ncols_ : 0; }
    std::size_t cols() const { return ncols_; }

    void reserve(std::size_t rows) { data_.reserve(rows * ncols_); }
    void append_row(const std::vector<double>& row);

    double at(std::size_t row, std::size_t col) const { return data_[row * ncols_ + col]; }
    double& at(std::size_t row, std::size_t col) { return data_[row * ncols_ + col]; }

    /// Index of the first column of a group, e.g. "x" → column of x_0.
    std::size_t offset(const std::string& group) const;
    /// Contiguous slice of `len` columns starting at `group`_0.
    Vec block(std::size_t row, const std::string& group, int len) const;
    double value(std::size_t row, const std::string& name) const;
    void set_block(std::size_t row, const std::string& group, const Vec& v);
    void set_value(std::size_t row, const std::string& name, double v);

    double time(std::size_t row) const { return at(row, 0); }

    /// Header row then one line per sample, `%.17g` formatting.
    void write_csv(std::ostream& os) const;
    void write_csv(const std::string& path) const;

    /// Parses a CSV written by write_csv. Throws std::runtime_error on a
    /// malformed header, a short row or a non-numeric field.
    static TrajectoryLog read_csv(std::istream& is);
    static TrajectoryLog read_csv(const std::string& path);

private:
    LogSchema schema_;
    std::vector<std::string> columns_;
    std::size_t ncols_ = 0;
    std::vector<double> data_;
};

}  // namespace hvacpd
