#include "mmslam/visual/vocabulary.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <random>
#include <set>

#include "mmslam/error.hpp"

namespace mmslam::visual {

namespace {

constexpr char kMagic[8] = {'M', 'M', 'S', 'V', 'O', 'C', '0', '1'};

double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * (1.0 / 9007199254740992.0);
}

BinaryDescriptor majority(const std::vector<BinaryDescriptor>& all,
                          const std::vector<std::uint32_t>& members) {
  std::array<std::uint32_t, kDescriptorBits> ones{};
  for (auto m : members)
    for (int b = 0; b < kDescriptorBits; ++b) ones[static_cast<std::size_t>(b)] += all[m].test(b);
  BinaryDescriptor c;
  for (int b = 0; b < kDescriptorBits; ++b)
    c.set(b, 2 * ones[static_cast<std::size_t>(b)] > members.size());
  return c;
}

std::size_t nearest_center(const std::vector<BinaryDescriptor>& centers, const BinaryDescriptor& d) {
  std::size_t best = 0;
  int best_d = std::numeric_limits<int>::max();
  for (std::size_t c = 0; c < centers.size(); ++c) {
    const int h = hamming(centers[c], d);
    if (h < best_d) {
      best_d = h;
      best = c;
    }
  }
  return best;
}

class TreeBuilder {
 public:
  TreeBuilder(const std::vector<BinaryDescriptor>& all, int k, int levels, std::uint64_t seed,
              std::vector<Vocabulary::Node>& nodes, std::uint32_t& words)
      : all_(all), k_(static_cast<std::size_t>(k)), levels_(levels), rng_(seed), nodes_(nodes),
        words_(words) {}

  void split(std::uint32_t node, const std::vector<std::uint32_t>& members, int level) {
    if (level >= levels_) {
      make_leaf(node);
      return;
    }
    const auto groups = cluster(members);
    for (const auto& g : groups) {
      const auto child = static_cast<std::uint32_t>(nodes_.size());
      Vocabulary::Node n;
      n.centroid = majority(all_, g);
      n.parent = node;
      nodes_.push_back(n);
      nodes_[node].children.push_back(child);

      std::set<BinaryDescriptor> distinct;
      for (auto m : g) distinct.insert(all_[m]);
      if (distinct.size() > 1 && level + 1 < levels_) split(child, g, level + 1);
      else make_leaf(child);
    }
  }

 private:
  void make_leaf(std::uint32_t node) { nodes_[node].word_id = static_cast<std::int32_t>(words_++); }

  std::vector<std::vector<std::uint32_t>> cluster(const std::vector<std::uint32_t>& members) {
    std::vector<BinaryDescriptor> distinct;
    {
      std::set<BinaryDescriptor> seen;
      for (auto m : members)
        if (seen.insert(all_[m]).second) distinct.push_back(all_[m]);
    }
    std::vector<BinaryDescriptor> centers;
    if (distinct.size() <= k_) {
      centers = distinct;
    } else {
      centers = seed_centers(members);
    }

    std::vector<std::size_t> assign(members.size(), std::numeric_limits<std::size_t>::max());
    for (int it = 0; it < 50; ++it) {
      bool changed = false;
      for (std::size_t i = 0; i < members.size(); ++i) {
        const std::size_t c = nearest_center(centers, all_[members[i]]);
        if (c != assign[i]) {
          assign[i] = c;
          changed = true;
        }
      }
      if (!changed) break;
      std::vector<std::vector<std::uint32_t>> groups(centers.size());
      for (std::size_t i = 0; i < members.size(); ++i) groups[assign[i]].push_back(members[i]);
      std::vector<BinaryDescriptor> next;
      for (const auto& g : groups)
        if (!g.empty()) next.push_back(majority(all_, g));
      if (next.size() != centers.size()) {
        centers = std::move(next);
        std::fill(assign.begin(), assign.end(), std::numeric_limits<std::size_t>::max());
        continue;
      }
      centers = std::move(next);
    }
    // Final grouping consistent with nearest-center descent.
    std::vector<std::vector<std::uint32_t>> groups(centers.size());
    for (auto m : members) groups[nearest_center(centers, all_[m])].push_back(m);
    std::erase_if(groups, [](const auto& g) { return g.empty(); });
    return groups;
  }

  // k-means++ style seeding with squared Hamming distances.
  std::vector<BinaryDescriptor> seed_centers(const std::vector<std::uint32_t>& members) {
    std::vector<BinaryDescriptor> centers;
    const std::size_t first = static_cast<std::size_t>(uniform01(rng_) * static_cast<double>(members.size()));
    centers.push_back(all_[members[std::min(first, members.size() - 1)]]);
    std::vector<double> d2(members.size());
    while (centers.size() < k_) {
      double total = 0.0;
      for (std::size_t i = 0; i < members.size(); ++i) {
        int best = std::numeric_limits<int>::max();
        for (const auto& c : centers) best = std::min(best, hamming(c, all_[members[i]]));
        d2[i] = static_cast<double>(best) * best;
        total += d2[i];
      }
      if (total <= 0.0) break;
      double r = uniform01(rng_) * total;
      std::size_t pick = members.size() - 1;
      for (std::size_t i = 0; i < members.size(); ++i) {
        if (d2[i] <= 0.0) continue;
        r -= d2[i];
        if (r < 0.0) {
          pick = i;
          break;
        }
      }
      centers.push_back(all_[members[pick]]);
    }
    return centers;
  }

  const std::vector<BinaryDescriptor>& all_;
  std::size_t k_;
  int levels_;
  std::mt19937_64 rng_;
  std::vector<Vocabulary::Node>& nodes_;
  std::uint32_t& words_;
};

template <typename T>
void write_pod(std::ofstream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::ifstream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw Error(ErrorCode::kIo, "vocabulary: truncated file");
  return v;
}

}  // namespace

Vocabulary Vocabulary::build(const std::vector<std::vector<BinaryDescriptor>>& documents, int k,
                             int levels, std::uint64_t seed) {
  if (k < 2) throw Error(ErrorCode::kInvalidArgument, "vocabulary: branching must be >= 2");
  if (levels < 1) throw Error(ErrorCode::kInvalidArgument, "vocabulary: levels must be >= 1");
  std::vector<BinaryDescriptor> all;
  for (const auto& doc : documents) all.insert(all.end(), doc.begin(), doc.end());
  if (all.size() < static_cast<std::size_t>(k))
    throw Error(ErrorCode::kInvalidArgument, "vocabulary: corpus smaller than branching factor");

  Vocabulary v;
  v.k_ = k;
  v.levels_ = levels;
  v.nodes_.push_back(Node{});
  std::vector<std::uint32_t> members(all.size());
  for (std::uint32_t i = 0; i < members.size(); ++i) members[i] = i;
  std::uint32_t words = 0;
  TreeBuilder(all, k, levels, seed, v.nodes_, words).split(0, members, 0);

  std::vector<std::size_t> doc_freq(words, 0);
  for (const auto& doc : documents) {
    std::set<WordId> seen;
    for (const auto& d : doc) seen.insert(v.transform(d));
    for (auto w : seen) ++doc_freq[w];
  }
  const double n_docs = static_cast<double>(std::max<std::size_t>(documents.size(), 1));
  v.idf_.resize(words);
  for (std::size_t w = 0; w < words; ++w)
    v.idf_[w] = std::log(n_docs / static_cast<double>(std::max<std::size_t>(doc_freq[w], 1)));
  return v;
}

WordId Vocabulary::transform(const BinaryDescriptor& d) const {
  if (nodes_.empty()) throw Error(ErrorCode::kPrecondition, "vocabulary: not built");
  std::uint32_t node = 0;
  while (!nodes_[node].children.empty()) {
    std::uint32_t best = nodes_[node].children.front();
    int best_d = std::numeric_limits<int>::max();
    for (auto c : nodes_[node].children) {
      const int h = hamming(nodes_[c].centroid, d);
      if (h < best_d) {
        best_d = h;
        best = c;
      }
    }
    node = best;
  }
  return static_cast<WordId>(nodes_[node].word_id);
}

void Vocabulary::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, "vocabulary: cannot open " + path.string());
  out.write(kMagic, sizeof(kMagic));
  write_pod(out, static_cast<std::uint32_t>(k_));
  write_pod(out, static_cast<std::uint32_t>(levels_));
  write_pod(out, static_cast<std::uint32_t>(nodes_.size()));
  write_pod(out, static_cast<std::uint32_t>(idf_.size()));
  for (const auto& n : nodes_) {
    write_pod(out, n.parent);
    write_pod(out, n.word_id);
    write_pod(out, static_cast<std::uint32_t>(n.children.size()));
    for (auto c : n.children) write_pod(out, c);
    for (auto w : n.centroid.bits) write_pod(out, w);
  }
  for (double w : idf_) write_pod(out, w);
  if (!out) throw Error(ErrorCode::kIo, "vocabulary: write failed");
}

Vocabulary Vocabulary::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "vocabulary: cannot open " + path.string());
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw Error(ErrorCode::kIo, "vocabulary: bad magic");
  Vocabulary v;
  v.k_ = static_cast<int>(read_pod<std::uint32_t>(in));
  v.levels_ = static_cast<int>(read_pod<std::uint32_t>(in));
  const auto n_nodes = read_pod<std::uint32_t>(in);
  const auto n_words = read_pod<std::uint32_t>(in);
  v.nodes_.resize(n_nodes);
  for (auto& n : v.nodes_) {
    n.parent = read_pod<std::uint32_t>(in);
    n.word_id = read_pod<std::int32_t>(in);
    const auto nc = read_pod<std::uint32_t>(in);
    if (nc > n_nodes) throw Error(ErrorCode::kIo, "vocabulary: corrupt child count");
    n.children.resize(nc);
    for (auto& c : n.children) {
      c = read_pod<std::uint32_t>(in);
      if (c >= n_nodes) throw Error(ErrorCode::kIo, "vocabulary: child index out of range");
    }
    for (auto& w : n.centroid.bits) w = read_pod<std::uint64_t>(in);
    if (n.children.empty() && (n.word_id < 0 || static_cast<std::uint32_t>(n.word_id) >= n_words))
      throw Error(ErrorCode::kIo, "vocabulary: leaf without valid word id");
  }
  v.idf_.resize(n_words);
  for (auto& w : v.idf_) w = read_pod<double>(in);
  return v;
}

bool Vocabulary::operator==(const Vocabulary& o) const {
  if (k_ != o.k_ || levels_ != o.levels_ || idf_ != o.idf_ || nodes_.size() != o.nodes_.size())
    return false;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    const auto& a = nodes_[i];
    const auto& b = o.nodes_[i];
    if (a.centroid != b.centroid || a.parent != b.parent || a.children != b.children ||
        a.word_id != b.word_id)
      return false;
  }
  return true;
}

BowVector bow_transform(const std::vector<VisualFeature>& features, const Vocabulary& vocab) {
  BowVector v;
  if (features.empty()) return v;
  std::map<WordId, double> tf;
  for (const auto& f : features) tf[vocab.transform(f.descriptor)] += 1.0;
  const double n = static_cast<double>(features.size());
  double total = 0.0;
  for (const auto& [w, count] : tf) {
    const double weight = count / n * vocab.idf(w);
    if (weight > 0.0) {
      v[w] = weight;
      total += weight;
    }
  }
  for (auto& [w, weight] : v) weight /= total;
  return v;
}

double l1_score(const BowVector& vi, const BowVector& vj) {
  double diff = 0.0;
  auto a = vi.begin();
  auto b = vj.begin();
  while (a != vi.end() || b != vj.end()) {
    if (b == vj.end() || (a != vi.end() && a->first < b->first)) {
      diff += std::abs(a->second);
      ++a;
    } else if (a == vi.end() || b->first < a->first) {
      diff += std::abs(b->second);
      ++b;
    } else {
      diff += std::abs(a->second - b->second);
      ++a;
      ++b;
    }
  }
  if (vi.empty() || vj.empty()) return 0.0;
  return std::clamp(1.0 - 0.5 * diff, 0.0, 1.0);
}

}  // namespace mmslam::visual
