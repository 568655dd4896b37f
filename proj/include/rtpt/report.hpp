#pragma once

#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include "rtpt/errors.hpp"
#include "rtpt/metrics.hpp"

namespace rtpt {

inline std::string condition_header(const std::string& condition) {
  return condition == "clean" ? "Acc." : "Rob.(" + condition + ")";
}

/// CSV with exact counts so a round-trip reproduces the table bit for bit.
inline void write_csv(const ReportTable& table, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot open csv for writing: " + path);
  out << "dataset,method,condition,correct,total,percent\n";
  for (std::size_t m = 0; m < table.methods.size(); ++m) {
    for (std::size_t c = 0; c < table.conditions.size(); ++c) {
      const MetricCell& cell = table.cells[m][c];
      out << table.dataset << "," << table.methods[m] << "," << table.conditions[c]
          << "," << cell.correct << "," << cell.total << "," << cell.display() << "\n";
    }
  }
}

inline ReportTable read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open csv: " + path);
  std::string line;
  if (!std::getline(in, line)) throw InputError("empty csv: " + path);
  ReportTable table;
  auto index_of = [](std::vector<std::string>& names, const std::string& name) {
    for (std::size_t i = 0; i < names.size(); ++i) {
      if (names[i] == name) return i;
    }
    names.push_back(name);
    return names.size() - 1;
  };
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string dataset, method, condition, correct, total;
    std::getline(row, dataset, ',');
    std::getline(row, method, ',');
    std::getline(row, condition, ',');
    std::getline(row, correct, ',');
    std::getline(row, total, ',');
    if (table.dataset.empty()) table.dataset = dataset;
    const std::size_t m = index_of(table.methods, method);
    const std::size_t c = index_of(table.conditions, condition);
    if (table.cells.size() < table.methods.size()) table.cells.resize(table.methods.size());
    for (auto& r : table.cells) r.resize(table.conditions.size());
    table.cells[m][c].correct = std::stoll(correct);
    table.cells[m][c].total = std::stoll(total);
  }
  return table;
}

/// Markdown table with the best value in each column bolded.
inline std::string to_markdown(const ReportTable& table) {
  std::vector<std::size_t> best(table.conditions.size(), 0);
  for (std::size_t c = 0; c < table.conditions.size(); ++c) {
    for (std::size_t m = 1; m < table.methods.size(); ++m) {
      if (cell_greater(table.cells[m][c], table.cells[best[c]][c])) best[c] = m;
    }
  }
  std::ostringstream out;
  out << "| Method |";
  for (const auto& cond : table.conditions) out << " " << condition_header(cond) << " |";
  out << "\n|---|";
  for (std::size_t c = 0; c < table.conditions.size(); ++c) out << "---|";
  out << "\n";
  for (std::size_t m = 0; m < table.methods.size(); ++m) {
    out << "| " << table.methods[m] << " |";
    for (std::size_t c = 0; c < table.conditions.size(); ++c) {
      const std::string v = table.cells[m][c].display();
      const bool is_best =
          m == best[c] && !cell_greater(table.cells[best[c]][c], table.cells[m][c]);
      out << " " << (is_best ? "**" + v + "**" : v) << " |";
    }
    out << "\n";
  }
  return out.str();
}

/// Fixed-width text table for terminals.
inline std::string to_text(const ReportTable& table) {
  std::ostringstream out;
  out << std::left << std::setw(16) << ("[" + table.dataset + "]");
  for (const auto& cond : table.conditions) {
    out << std::right << std::setw(26) << condition_header(cond);
  }
  out << "\n";
  for (std::size_t m = 0; m < table.methods.size(); ++m) {
    out << std::left << std::setw(16) << table.methods[m];
    for (std::size_t c = 0; c < table.conditions.size(); ++c) {
      const MetricCell& cell = table.cells[m][c];
      std::ostringstream v;
      v << cell.display() << " (" << cell.correct << "/" << cell.total << ")";
      out << std::right << std::setw(26) << v.str();
    }
    out << "\n";
  }
  return out.str();
}

}  // namespace rtpt
