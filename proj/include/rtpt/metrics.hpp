#pragma once

#include <algorithm>
#include <cstdio>
#include <map>
#include <string>
#include <vector>

#include "rtpt/errors.hpp"
#include "rtpt/eval.hpp"

namespace rtpt {

/// Exact rational accuracy cell; display rounding happens only at print time.
struct MetricCell {
  long long correct = 0;
  long long total = 0;

  double percent() const {
    return total == 0 ? 0.0 : 100.0 * static_cast<double>(correct) / static_cast<double>(total);
  }
  std::string display() const {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.1f", percent());
    return buf;
  }
  bool operator==(const MetricCell&) const = default;
};

/// Accuracy table over (method, condition). The clean condition is reported
/// as Acc., attack conditions as Rob.
struct ReportTable {
  std::string dataset;
  std::vector<std::string> methods;     // row order (first seen)
  std::vector<std::string> conditions;  // column order (clean first, then first seen)
  std::vector<std::vector<MetricCell>> cells;  // [method][condition]

  const MetricCell& at(const std::string& method, const std::string& condition) const {
    for (std::size_t m = 0; m < methods.size(); ++m) {
      if (methods[m] != method) continue;
      for (std::size_t c = 0; c < conditions.size(); ++c) {
        if (conditions[c] == condition) return cells[m][c];
      }
    }
    throw InputError("no table cell for " + method + " / " + condition);
  }

  bool operator==(const ReportTable&) const = default;
};

inline ReportTable compute_metrics(const std::vector<EvalRecord>& records) {
  if (records.empty()) throw InputError("no records to aggregate");
  ReportTable table;
  table.dataset = records[0].dataset;

  auto index_of = [](std::vector<std::string>& names, const std::string& name) {
    for (std::size_t i = 0; i < names.size(); ++i) {
      if (names[i] == name) return i;
    }
    names.push_back(name);
    return names.size() - 1;
  };

  for (const auto& r : records) {
    if (r.dataset != table.dataset) {
      throw InputError("records mix datasets: " + table.dataset + " vs " + r.dataset);
    }
    const std::size_t m = index_of(table.methods, r.method);
    const std::size_t c = index_of(table.conditions, r.condition);
    if (table.cells.size() < table.methods.size()) table.cells.resize(table.methods.size());
    for (auto& row : table.cells) row.resize(table.conditions.size());
    ++table.cells[m][c].total;
    if (r.correct) ++table.cells[m][c].correct;
  }

  // Clean column first; remaining conditions keep first-seen order.
  auto clean_it = std::find(table.conditions.begin(), table.conditions.end(), "clean");
  if (clean_it != table.conditions.end() && clean_it != table.conditions.begin()) {
    const std::size_t from = static_cast<std::size_t>(clean_it - table.conditions.begin());
    std::rotate(table.conditions.begin(), clean_it, clean_it + 1);
    for (auto& row : table.cells) {
      std::rotate(row.begin(), row.begin() + static_cast<long>(from),
                  row.begin() + static_cast<long>(from) + 1);
    }
  }
  return table;
}

/// True when cell a's accuracy is strictly greater than b's, compared as
/// exact rationals so display rounding can never flip an ordering.
inline bool cell_greater(const MetricCell& a, const MetricCell& b) {
  if (a.total == 0 || b.total == 0) return b.total == 0 && a.total != 0;
  return static_cast<long double>(a.correct) * b.total >
         static_cast<long double>(b.correct) * a.total;
}

}  // namespace rtpt
