#include "heavytail/matrix_io.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <vector>

namespace heavytail {

namespace {

void append_number(std::string& line, double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    line += buf;
}

} // namespace

void write_matrix(std::ostream& os, const Matrix& m) {
    os << m.rows() << ' ' << m.cols() << '\n';
    std::string line;
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        line.clear();
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            if (j) line += ' ';
            append_number(line, m(i, j));
        }
        line += '\n';
        os << line;
    }
}

void write_matrix_file(const std::string& path, const Matrix& m) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    write_matrix(out, m);
}

Matrix read_matrix(std::istream& is) {
    Eigen::Index rows = 0, cols = 0;
    if (!(is >> rows >> cols) || rows < 1 || cols < 1)
        throw std::runtime_error("matrix header must be 'rows cols'");
    Matrix m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index j = 0; j < cols; ++j)
            if (!(is >> m(i, j))) throw std::runtime_error("matrix body truncated");
    return m;
}

Matrix read_matrix_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open: " + path);
    return read_matrix(in);
}

Vector read_vector_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open: " + path);
    std::vector<double> vals;
    // Accept either the matrix format (header line) or a bare number list.
    std::string first_line;
    std::getline(in, first_line);
    std::istringstream head(first_line);
    double a = 0;
    long long r = 0, c = 0;
    if ((head >> r >> c) && !(head >> a) && r >= 1 && (c == 1 || r == 1)) {
        double v;
        while (in >> v) vals.push_back(v);
        if (static_cast<long long>(vals.size()) != r * c)
            throw std::runtime_error("vector body truncated: " + path);
    } else {
        std::istringstream again(first_line);
        double v;
        while (again >> v) vals.push_back(v);
        while (in >> v) vals.push_back(v);
    }
    if (vals.empty()) throw std::runtime_error("no values in: " + path);
    Vector out(static_cast<Eigen::Index>(vals.size()));
    for (size_t i = 0; i < vals.size(); ++i) out[static_cast<Eigen::Index>(i)] = vals[i];
    return out;
}

void write_vector_file(const std::string& path, const Vector& v) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    std::string line;
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        line.clear();
        append_number(line, v[i]);
        line += '\n';
        out << line;
    }
}

} // namespace heavytail
