#include "hvacpd/trajectory_log.hpp"

#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace hvacpd {

namespace {

void push_group(std::vector<std::string>& out, const std::string& name, int len) {
    for (int i = 0; i < len; ++i) out.push_back(name + "_" + std::to_string(i));
}

std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::istringstream is(line);
    while (std::getline(is, field, ',')) out.push_back(field);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

// Recovers (n1, n2, c) from the header by counting group members.
LogSchema schema_from_header(const std::vector<std::string>& header) {
    auto count = [&](const std::string& group) {
        int k = 0;
        for (const auto& h : header) {
            if (h.rfind(group + "_", 0) == 0) {
                const std::string rest = h.substr(group.size() + 1);
                if (!rest.empty() && rest.find_first_not_of("0123456789") == std::string::npos) ++k;
            }
        }
        return k;
    };
    LogSchema s;
    s.n1 = count("z_u");
    s.n2 = count("x") - s.n1;
    s.c = count("lambda");
    return s;
}

}  // namespace

std::vector<std::string> LogSchema::columns() const {
    std::vector<std::string> out{"t"};
    push_group(out, "x", n());
    push_group(out, "xi", n1);
    push_group(out, "z_u", n1);
    push_group(out, "lambda", c);
    push_group(out, "d_q_hat", n1);
    push_group(out, "y_o", n1);
    push_group(out, "r", n1);
    push_group(out, "y_p", n1);
    push_group(out, "zeta", n1);
    push_group(out, "nu", n1);
    push_group(out, "w_q", n1);
    push_group(out, "w_a", n());
    for (const char* s : {"S_o", "S_p", "S", "res_combined", "tol_combined"}) out.emplace_back(s);
    return out;
}

TrajectoryLog::TrajectoryLog(LogSchema schema)
    : schema_(schema), columns_(schema.columns()), ncols_(columns_.size()) {}

void TrajectoryLog::append_row(const std::vector<double>& row) {
    if (row.size() != ncols_) throw std::invalid_argument("TrajectoryLog: row width mismatch");
    data_.insert(data_.end(), row.begin(), row.end());
}

std::size_t TrajectoryLog::offset(const std::string& group) const {
    for (std::size_t i = 0; i < columns_.size(); ++i) {
        if (columns_[i] == group || columns_[i] == group + "_0") return i;
    }
    throw std::out_of_range("TrajectoryLog: no column group " + group);
}

Vec TrajectoryLog::block(std::size_t row, const std::string& group, int len) const {
    Vec v(len);
    if (len == 0) return v;
    const std::size_t off = offset(group);
    for (int i = 0; i < len; ++i) v[i] = at(row, off + i);
    return v;
}

double TrajectoryLog::value(std::size_t row, const std::string& name) const { return at(row, offset(name)); }

void TrajectoryLog::set_block(std::size_t row, const std::string& group, const Vec& v) {
    if (v.size() == 0) return;
    const std::size_t off = offset(group);
    for (Eigen::Index i = 0; i < v.size(); ++i) at(row, off + i) = v[i];
}

void TrajectoryLog::set_value(std::size_t row, const std::string& name, double v) { at(row, offset(name)) = v; }

void TrajectoryLog::write_csv(std::ostream& os) const {
    for (std::size_t i = 0; i < ncols_; ++i) os << (i ? "," : "") << columns_[i];
    os << '\n';
    char buf[32];
    std::string line;
    for (std::size_t r = 0; r < rows(); ++r) {
        line.clear();
        for (std::size_t c = 0; c < ncols_; ++c) {
            const int len = std::snprintf(buf, sizeof buf, "%.17g", at(r, c));
            if (c) line.push_back(',');
            line.append(buf, static_cast<std::size_t>(len));
        }
        line.push_back('\n');
        os << line;
    }
}

void TrajectoryLog::write_csv(const std::string& path) const {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open " + path + " for writing");
    write_csv(os);
}

TrajectoryLog TrajectoryLog::read_csv(std::istream& is) {
    std::string line;
    if (!std::getline(is, line)) throw std::runtime_error("log: empty file");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto header = split(line);
    const LogSchema schema = schema_from_header(header);
    if (schema.n1 <= 0 || schema.n2 < 0) throw std::runtime_error("log: header does not describe a coupled run");
    TrajectoryLog log(schema);
    if (header != log.columns_) throw std::runtime_error("log: header does not match the expected column layout");

    std::vector<double> row(log.ncols_);
    std::size_t lineno = 1;
    while (std::getline(is, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto fields = split(line);
        if (fields.size() != log.ncols_) {
            throw std::runtime_error("log: line " + std::to_string(lineno) + " has " + std::to_string(fields.size()) +
                                     " fields, expected " + std::to_string(log.ncols_));
        }
        for (std::size_t i = 0; i < fields.size(); ++i) {
            const std::string& f = fields[i];
            char* end = nullptr;
            row[i] = std::strtod(f.c_str(), &end);
            if (f.empty() || end != f.c_str() + f.size()) {
                throw std::runtime_error("log: non-numeric field at line " + std::to_string(lineno));
            }
        }
        log.append_row(row);
    }
    return log;
}

TrajectoryLog TrajectoryLog::read_csv(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open log " + path);
    return read_csv(is);
}

}  // namespace hvacpd
