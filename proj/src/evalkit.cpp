#include "provdistill/evalkit.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include "provdistill/errors.hpp"

namespace provdistill {

ConfusionCounts confusion(const std::vector<bool>& flags, const std::vector<bool>& truth) {
    if (flags.size() != truth.size())
        throw Error(Errc::shape_mismatch, "flags/truth length mismatch");
    ConfusionCounts c;
    for (size_t i = 0; i < flags.size(); ++i) {
        if (flags[i] && truth[i]) c.tp++;
        else if (flags[i] && !truth[i]) c.fp++;
        else if (!flags[i] && truth[i]) c.fn++;
        else c.tn++;
    }
    return c;
}

MetricsBlock metrics(const ConfusionCounts& c) {
    if (c.total() == 0) throw Error(Errc::empty_evaluation, "no nodes evaluated");
    MetricsBlock m;
    m.accuracy = static_cast<double>(c.tp + c.tn) / static_cast<double>(c.total());
    if (c.tp + c.fp > 0)
        m.precision = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp);
    if (c.tp + c.fn > 0)
        m.recall = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
    if (m.precision && m.recall && (*m.precision + *m.recall) > 0)
        m.f1 = 2.0 * *m.precision * *m.recall / (*m.precision + *m.recall);
    return m;
}

void ComparisonTable::add(std::string method, double r, const MetricsBlock& m, double seconds) {
    rows.push_back({std::move(method), r, m, seconds});
}

void ComparisonTable::add(std::string method, double r, const ConfusionCounts& c, double seconds) {
    rows.push_back({std::move(method), r, metrics(c), seconds});
}

namespace {

std::string full(const std::optional<double>& v) {
    if (!v) return "undefined";
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", *v);
    return buf;
}

std::string short2(const std::optional<double>& v) {
    return v ? round2(*v) : std::string("undefined");
}

}  // namespace

std::string round2(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", v);
    std::string s = buf;
    while (!s.empty() && s.back() == '0') s.pop_back();
    if (!s.empty() && s.back() == '.') s.pop_back();
    return s.empty() ? "0" : s;
}

std::string ComparisonTable::to_csv() const {
    std::ostringstream out;
    out << "method,r,accuracy,precision,recall,f1,train_seconds\n";
    for (const auto& row : rows) {
        char rbuf[32];
        std::snprintf(rbuf, sizeof(rbuf), "%g", row.r);
        char tbuf[32];
        std::snprintf(tbuf, sizeof(tbuf), "%.17g", row.train_seconds);
        out << row.method << ',' << rbuf << ',' << full(row.m.accuracy) << ','
            << full(row.m.precision) << ',' << full(row.m.recall) << ',' << full(row.m.f1) << ','
            << tbuf << '\n';
    }
    return out.str();
}

std::string ComparisonTable::to_text() const {
    std::ostringstream out;
    out << "method      r        acc    prec   rec    f1     t(s)\n";
    for (const auto& row : rows) {
        char rbuf[32];
        std::snprintf(rbuf, sizeof(rbuf), "%-8g", row.r);
        char line[160];
        std::snprintf(line, sizeof(line), "%-11s %s %-6s %-6s %-6s %-6s %s\n", row.method.c_str(),
                      rbuf, short2(row.m.accuracy).c_str(), short2(row.m.precision).c_str(),
                      short2(row.m.recall).c_str(), short2(row.m.f1).c_str(),
                      round2(row.train_seconds).c_str());
        out << line;
    }
    return out.str();
}

}  // namespace provdistill
