#ifndef ATRL_MODEL_ATTENTION_EXPORT_HPP_
#define ATRL_MODEL_ATTENTION_EXPORT_HPP_

#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "atrl/model/network.hpp"
#include "atrl/util/format.hpp"

namespace atrl::model {

// Attention matrices of every layer for one context. Empty when ablated.
inline AttentionMaps attention_weights(const ModelParams& m, const RawContext& raw) {
  AttentionMaps maps;
  evaluate(m, raw, &maps);
  return maps;
}

// Row/column labels in H1.., R1.., T1.. style (1-based).
inline std::vector<std::string> joint_labels(std::size_t humans, std::size_t robots,
                                             std::size_t tasks) {
  std::vector<std::string> out;
  for (std::size_t k = 0; k < humans; ++k) out.push_back("H" + std::to_string(k + 1));
  for (std::size_t k = 0; k < robots; ++k) out.push_back("R" + std::to_string(k + 1));
  for (std::size_t k = 0; k < tasks; ++k) out.push_back("T" + std::to_string(k + 1));
  return out;
}

inline std::vector<std::string> attribute_labels(Attribute a, std::size_t count) {
  std::vector<std::string> out;
  for (std::size_t k = 0; k < count; ++k) out.push_back(kAttributeTags[a] + std::to_string(k + 1));
  return out;
}

// CSV rows (head, query, key, weight) for one attribute's per-head matrices.
inline void write_attention_csv(std::ostream& os, const std::vector<Tensor>& heads,
                                const std::vector<std::string>& query_labels,
                                const std::vector<std::string>& key_labels) {
  os << "head,query,key,weight\n";
  for (std::size_t h = 0; h < heads.size(); ++h) {
    const Tensor& a = heads[h];
    if (a.rows() != query_labels.size() || a.cols() != key_labels.size()) {
      throw DimensionError("attention export: labels do not match matrix " + a.shape_string());
    }
    for (std::size_t r = 0; r < a.rows(); ++r)
      for (std::size_t c = 0; c < a.cols(); ++c)
        os << h << ',' << query_labels[r] << ',' << key_labels[c] << ',' << format_double(a(r, c))
           << '\n';
  }
}

// Inverse of write_attention_csv. Rows must appear head-major, row-major.
inline std::vector<Tensor> read_attention_csv(std::istream& is, std::size_t rows,
                                              std::size_t cols) {
  std::string line;
  if (!std::getline(is, line) || line != "head,query,key,weight") {
    throw FormatError("header", "not an attention CSV");
  }
  std::vector<Tensor> heads;
  std::size_t k = 0;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string head, q, key, w;
    std::getline(ss, head, ',');
    std::getline(ss, q, ',');
    std::getline(ss, key, ',');
    std::getline(ss, w, ',');
    const auto h = parse_int<std::size_t>(head, "head");
    if (h == heads.size()) {
      heads.emplace_back(rows, cols);
      k = 0;
    }
    if (h + 1 != heads.size() || k >= rows * cols) {
      throw FormatError("head", "rows out of order");
    }
    heads.back()[k++] = parse_double(w, "weight");
  }
  return heads;
}

}  // namespace atrl::model

#endif  // ATRL_MODEL_ATTENTION_EXPORT_HPP_
