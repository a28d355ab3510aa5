#include "cmix/prompting.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>

#include "cmix/rng.hpp"
#include "cmix/text.hpp"
#include "json.hpp"

#include <Eigen/Dense>

namespace cmix {

using nlohmann::json;

std::string positive_surface(Task task) {
  switch (task) {
    case Task::humor: return "humorous";
    case Task::sarcasm: return "sarcastic";
    case Task::hate: return "hateful";
  }
  throw ValidationError("positive_surface: unknown task");
}

std::string negative_surface(Task task) {
  return "non-" + positive_surface(task);
}

std::uint64_t fnv1a64(const std::string& text) {
  std::uint64_t h = 14695981039346656037ULL;
  for (const char c : text) {
    h ^= static_cast<unsigned char>(c);
    h *= 1099511628211ULL;
  }
  return h;
}

namespace {

using Mat = Eigen::MatrixXd;

Mat tf_vectors(const std::vector<Sample>& samples,
               std::map<std::string, int>& vocab) {
  for (const Sample& s : samples) {
    for (const std::string& token : tokenize(s.text)) {
      vocab.emplace(token, 0);
    }
  }
  int next = 0;
  for (auto& [token, id] : vocab) id = next++;

  Mat vecs = Mat::Zero(static_cast<Eigen::Index>(samples.size()),
                       static_cast<Eigen::Index>(vocab.size()));
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const std::vector<std::string> tokens = tokenize(samples[i].text);
    for (const std::string& token : tokens) {
      vecs(static_cast<Eigen::Index>(i), vocab.at(token)) += 1.0;
    }
    const double total = vecs.row(static_cast<Eigen::Index>(i)).sum();
    if (total > 0.0) vecs.row(static_cast<Eigen::Index>(i)) /= total;
  }
  return vecs;
}

}  // namespace

std::vector<Sample> select_shots(const std::vector<Sample>& train, int k,
                                 std::uint64_t seed) {
  if (k < 0) throw ValidationError("select_shots: k must be >= 0");
  if (k == 0) return {};
  if (static_cast<std::size_t>(k) > train.size()) {
    throw ValidationError("select_shots: k exceeds the candidate pool (" +
                          std::to_string(k) + " > " +
                          std::to_string(train.size()) + ")");
  }
  bool has_pos = false, has_neg = false;
  for (const Sample& s : train) {
    if (s.label == 1) has_pos = true;
    if (s.label == 0) has_neg = true;
  }
  if (k >= 2 && (!has_pos || !has_neg)) {
    throw ValidationError("select_shots: k >= 2 requires both classes in the pool");
  }

  std::map<std::string, int> vocab;
  const Mat vecs = tf_vectors(train, vocab);
  const std::size_t n = train.size();

  Rng rng(derive_seed(seed, 21));
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  rng.shuffle(order);

  Mat centroids(k, vecs.cols());
  for (int c = 0; c < k; ++c) {
    centroids.row(c) = vecs.row(static_cast<Eigen::Index>(order[static_cast<std::size_t>(c)]));
  }

  std::vector<int> assign(n, -1);
  for (int iter = 0; iter < 100; ++iter) {
    bool changed = false;
    for (std::size_t i = 0; i < n; ++i) {
      int best = 0;
      double best_d = (vecs.row(static_cast<Eigen::Index>(i)) - centroids.row(0))
                          .squaredNorm();
      for (int c = 1; c < k; ++c) {
        const double d =
            (vecs.row(static_cast<Eigen::Index>(i)) - centroids.row(c)).squaredNorm();
        if (d < best_d) {
          best_d = d;
          best = c;
        }
      }
      if (assign[i] != best) {
        assign[i] = best;
        changed = true;
      }
    }
    if (!changed) break;
    for (int c = 0; c < k; ++c) {
      Eigen::RowVectorXd mean = Eigen::RowVectorXd::Zero(vecs.cols());
      std::size_t count = 0;
      for (std::size_t i = 0; i < n; ++i) {
        if (assign[i] == c) {
          mean += vecs.row(static_cast<Eigen::Index>(i));
          ++count;
        }
      }
      if (count > 0) centroids.row(c) = mean / static_cast<double>(count);
    }
  }

  // Nearest sample to each centroid, ids kept distinct.
  std::vector<std::size_t> chosen;
  std::set<std::size_t> used;
  for (int c = 0; c < k; ++c) {
    std::size_t best = n;
    double best_d = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (used.count(i)) continue;
      const double d =
          (vecs.row(static_cast<Eigen::Index>(i)) - centroids.row(c)).squaredNorm();
      if (best == n || d < best_d) {
        best = i;
        best_d = d;
      }
    }
    chosen.push_back(best);
    used.insert(best);
  }

  // Class balance: neither class may exceed ceil(k/2) when both exist.
  if (has_pos && has_neg) {
    const std::size_t cap = (static_cast<std::size_t>(k) + 1) / 2;
    for (int label : {0, 1}) {
      std::vector<std::size_t> members;  // positions in `chosen` with this label
      for (std::size_t pos = 0; pos < chosen.size(); ++pos) {
        if (train[chosen[pos]].label == label) members.push_back(pos);
      }
      if (members.size() <= cap) continue;
      // Farthest-from-centroid surplus members get swapped out first.
      std::sort(members.begin(), members.end(), [&](std::size_t a, std::size_t b) {
        const double da = (vecs.row(static_cast<Eigen::Index>(chosen[a])) -
                           centroids.row(static_cast<int>(a)))
                              .squaredNorm();
        const double db = (vecs.row(static_cast<Eigen::Index>(chosen[b])) -
                           centroids.row(static_cast<int>(b)))
                              .squaredNorm();
        if (da != db) return da > db;
        return a < b;
      });
      const int other = 1 - label;
      const std::size_t surplus = members.size() - cap;
      for (std::size_t s = 0; s < surplus; ++s) {
        const std::size_t pos = members[s];
        std::size_t best = n;
        double best_d = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
          if (used.count(i) || train[i].label != other) continue;
          const double d = (vecs.row(static_cast<Eigen::Index>(i)) -
                            centroids.row(static_cast<int>(pos)))
                               .squaredNorm();
          if (best == n || d < best_d) {
            best = i;
            best_d = d;
          }
        }
        if (best == n) break;  // opposite class exhausted
        used.erase(chosen[pos]);
        chosen[pos] = best;
        used.insert(best);
      }
    }
  }

  std::vector<Sample> shots;
  shots.reserve(chosen.size());
  for (std::size_t i : chosen) shots.push_back(train[i]);
  return shots;
}

std::string render_prompt(const PromptConfig& cfg, const std::vector<Sample>& shots,
                          const Sample& query) {
  if (static_cast<int>(shots.size()) != cfg.k) {
    throw ValidationError("render_prompt: expected " + std::to_string(cfg.k) +
                          " shots, got " + std::to_string(shots.size()));
  }
  if (cfg.template_id != "default-v1") {
    throw ValidationError("render_prompt: unknown template '" + cfg.template_id +
                          "'");
  }
  const std::string pos = positive_surface(cfg.task);
  const std::string neg = negative_surface(cfg.task);

  std::string out;
  out += "### System\n";
  out += "You label code-mixed social media posts for the " + to_string(cfg.task) +
         " task. Decide whether the input is " + pos + " or " + neg +
         ". Answer with exactly one label: " + pos + " or " + neg + ".\n";
  if (!shots.empty()) {
    out += "\n### Examples\n";
    for (const Sample& shot : shots) {
      if (shot.label != 0 && shot.label != 1) {
        throw ValidationError("render_prompt: shot '" + shot.id +
                              "' has no usable label");
      }
      out += "Input: " + shot.text + "\n";
      out += "Label: " + (shot.label == 1 ? pos : neg) + "\n";
    }
  }
  out += "\n### Input\n";
  out += "Input: " + query.text + "\n";
  out += "Label:";
  return out;
}

std::optional<int> parse_label(const std::string& response, Task task) {
  const std::string hay = ascii_lower(response);
  const std::string pos = positive_surface(task);
  const std::string neg = negative_surface(task);
  const std::string not_form = "not " + pos;
  if (hay.find(neg) != std::string::npos ||
      hay.find(not_form) != std::string::npos) {
    return 0;
  }
  if (hay.find(pos) != std::string::npos) return 1;
  return std::nullopt;
}

std::string MockCompletionClient::send(const std::string& prompt) {
  const std::uint64_t h = fnv1a64(prompt) ^ seed_;
  const int label = static_cast<int>(h & 1ULL);
  return "Label: " +
         (label == 1 ? positive_surface(task_) : negative_surface(task_));
}

void save_transcript(const std::vector<TranscriptEntry>& entries,
                     const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write '" + path + "'");
  for (const TranscriptEntry& e : entries) {
    out << json{{"query_id", e.query_id},
                {"prompt_hash", std::to_string(e.prompt_hash)},
                {"response", e.response},
                {"parsed_label", e.parsed_label}}
               .dump()
        << "\n";
  }
}

}  // namespace cmix
