#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

namespace rtpt {

/// Learnable context token embeddings of the text branch. This is the only
/// parameter touched by test-time tuning; every test sample starts from a
/// fresh copy of the template initialization.
struct PromptContext {
  std::vector<Eigen::VectorXd> tokens;
  std::string init_template = "a photo of a";
  bool trainable = true;

  int length() const { return static_cast<int>(tokens.size()); }
  int dim() const { return tokens.empty() ? 0 : static_cast<int>(tokens[0].size()); }

  bool bitwise_equal(const PromptContext& other) const {
    if (tokens.size() != other.tokens.size()) return false;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
      if (tokens[i].size() != other.tokens[i].size()) return false;
      for (Eigen::Index j = 0; j < tokens[i].size(); ++j) {
        if (tokens[i][j] != other.tokens[i][j]) return false;
      }
    }
    return true;
  }
};

}  // namespace rtpt
