#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <vector>

#include "mmslam/visual/types.hpp"

namespace mmslam::visual {

using WordId = std::uint32_t;

// Hierarchical k-majority tree over binary descriptors (k-medians under the
// Hamming metric with bitwise-majority centroids) with tf-idf leaf weights.
//
// Binary file layout, little-endian:
//   char[8]  magic "MMSVOC01"
//   u32      k, levels, node_count, word_count
//   node_count x { u32 parent; i32 word_id (-1 if inner); u32 child_count;
//                  u32 children[child_count]; u8 centroid[32] }
//   word_count x f64 idf
class Vocabulary {
 public:
  struct Node {
    BinaryDescriptor centroid;
    std::uint32_t parent = 0;
    std::vector<std::uint32_t> children;
    std::int32_t word_id = -1;
  };

  Vocabulary() = default;

  // `documents` groups the training descriptors by image; idf = ln(N / n_i)
  // over those documents. Throws Error(kInvalidArgument) when the corpus has
  // fewer than k descriptors or k < 2 or levels < 1.
  static Vocabulary build(const std::vector<std::vector<BinaryDescriptor>>& documents, int k,
                          int levels, std::uint64_t seed);

  int branching() const { return k_; }
  int levels() const { return levels_; }
  std::size_t num_words() const { return idf_.size(); }
  const std::vector<Node>& nodes() const { return nodes_; }
  bool empty() const { return nodes_.empty(); }

  WordId transform(const BinaryDescriptor& d) const;
  double idf(WordId w) const { return idf_.at(w); }

  void save(const std::filesystem::path& path) const;
  static Vocabulary load(const std::filesystem::path& path);

  bool operator==(const Vocabulary& other) const;

 private:
  int k_ = 0;
  int levels_ = 0;
  std::vector<Node> nodes_;   // nodes_[0] is the root
  std::vector<double> idf_;   // by word id
};

// Sparse tf-idf vector, L1-normalized; every stored weight is > 0.
using BowVector = std::map<WordId, double>;

BowVector bow_transform(const std::vector<VisualFeature>& features, const Vocabulary& vocab);

// 1 - 0.5 * |vi - vj|_1 for L1-normalized vectors.
double l1_score(const BowVector& vi, const BowVector& vj);

}  // namespace mmslam::visual
