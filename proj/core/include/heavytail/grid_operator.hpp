#pragma once

#include <string>
#include <vector>

namespace heavytail {

// Element of the discretized contraction set: diagonal values in
// {1} u {2^-2^k, k = 0..9}, coded by the exponent e in {0, 1, 2, 4, ..., 512}
// (diagonal value 2^-e). Determinants are kept in log space.
class GridOperator {
public:
    static constexpr int kMaxCode = 512; // 2^9

    explicit GridOperator(int n) : codes_(static_cast<size_t>(n), 0) {}
    explicit GridOperator(std::vector<int> codes);

    static bool valid_code(int code);

    int n() const { return static_cast<int>(codes_.size()); }
    int code(int i) const { return codes_[static_cast<size_t>(i)]; }
    void set_code(int i, int code);
    const std::vector<int>& codes() const { return codes_; }

    double diag(int i) const;
    double log_diag(int i) const;
    double log_det() const;

    bool is_identity() const;

    std::string serialize() const; // space-separated exponent codes
    static GridOperator deserialize(const std::string& text);

    bool operator==(const GridOperator& other) const { return codes_ == other.codes_; }

private:
    std::vector<int> codes_;
};

} // namespace heavytail
