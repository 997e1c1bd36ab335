#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace provdistill {

// Malicious is the positive class throughout.
struct ConfusionCounts {
    uint64_t tp = 0;
    uint64_t fp = 0;
    uint64_t fn = 0;
    uint64_t tn = 0;

    uint64_t total() const { return tp + fp + fn + tn; }
    bool operator==(const ConfusionCounts&) const = default;
};

// Zero-denominator metrics stay unset rather than defaulting to 0; the
// recall discussion depends on honest denominators.
struct MetricsBlock {
    std::optional<double> accuracy;
    std::optional<double> precision;
    std::optional<double> recall;
    std::optional<double> f1;
};

ConfusionCounts confusion(const std::vector<bool>& flags, const std::vector<bool>& truth);

MetricsBlock metrics(const ConfusionCounts& c);

struct ComparisonRow {
    std::string method;
    double r = 1.0;
    MetricsBlock m;
    double train_seconds = 0.0;
};

struct ComparisonTable {
    std::vector<ComparisonRow> rows;

    void add(std::string method, double r, const MetricsBlock& m, double seconds);
    void add(std::string method, double r, const ConfusionCounts& c, double seconds);

    // Full-precision CSV: method,r,accuracy,precision,recall,f1,train_seconds
    std::string to_csv() const;
    // Two-decimal rounded view for reading side by side.
    std::string to_text() const;
};

// Rounds to two decimals and trims trailing zeros ("1", "0.89", "0.9").
std::string round2(double v);

}  // namespace provdistill
