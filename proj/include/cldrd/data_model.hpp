#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "cldrd/errors.hpp"

namespace cldrd {

struct Document {
  std::string id;
  std::string text;
};

struct Query {
  std::string id;
  std::string text;
};

/// Ordered, id-unique collection of identified texts.
template <typename Item>
class TextCollection {
 public:
  TextCollection() = default;

  /// Appends an item. Throws IntegrityError on an empty or duplicate id.
  void add(Item item) {
    if (item.id.empty()) throw IntegrityError("empty id");
    auto [it, inserted] = index_.emplace(item.id, items_.size());
    if (!inserted) throw IntegrityError("duplicate id '" + item.id + "'");
    items_.push_back(std::move(item));
  }

  const std::vector<Item>& items() const { return items_; }
  std::size_t size() const { return items_.size(); }
  bool empty() const { return items_.empty(); }
  const Item& operator[](std::size_t i) const { return items_[i]; }

  auto begin() const { return items_.begin(); }
  auto end() const { return items_.end(); }

  /// Position of an id, if present.
  std::optional<std::size_t> position(std::string_view id) const {
    auto it = index_.find(std::string(id));
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  const Item* find(std::string_view id) const {
    auto pos = position(id);
    return pos ? &items_[*pos] : nullptr;
  }

  const Item& at(std::string_view id) const {
    if (const Item* item = find(id)) return *item;
    throw LookupError("unknown id '" + std::string(id) + "'");
  }

 private:
  std::vector<Item> items_;
  std::unordered_map<std::string, std::size_t> index_;
};

using Corpus = TextCollection<Document>;
using QuerySet = TextCollection<Query>;

/// Graded relevance judgments keyed by (query id, doc id).
class Qrels {
 public:
  using Grades = std::map<std::string, int>;

  /// Throws IntegrityError on a duplicate key or negative grade.
  void add(const std::string& query_id, const std::string& doc_id, int grade);

  std::optional<int> grade(std::string_view query_id, std::string_view doc_id) const;

  /// Judgments for one query, or nullptr when the query is unjudged.
  const Grades* for_query(std::string_view query_id) const;

  const std::map<std::string, Grades, std::less<>>& queries() const { return by_query_; }
  std::size_t size() const { return count_; }
  bool empty() const { return count_ == 0; }

 private:
  std::map<std::string, Grades, std::less<>> by_query_;
  std::size_t count_ = 0;
};

struct RankedEntry {
  std::string doc_id;
  double score = 0.0;
  std::size_t rank = 0;
};

/// One query's ordered result list. Ranks are 1-based and contiguous.
struct RankedList {
  std::string query_id;
  std::vector<RankedEntry> entries;

  std::size_t size() const { return entries.size(); }
};

/// Throws IntegrityError unless ranks are 1..n, scores are non-increasing and
/// doc ids are unique.
void validate(const RankedList& list);

/// Assigns ranks 1..n to already-ordered (doc id, score) pairs.
RankedList make_ranked_list(std::string query_id,
                            std::vector<std::pair<std::string, double>> ordered);

/// Sorts by descending score with ascending doc id on ties, then ranks 1..n.
RankedList sort_into_ranked_list(std::string query_id,
                                 std::vector<std::pair<std::string, double>> scored);

// --- file formats ---

/// `docid<TAB>text`, exactly one tab per line.
Corpus load_collection(const std::filesystem::path& path);
/// `qid<TAB>text`, exactly one tab per line.
QuerySet load_queries(const std::filesystem::path& path);
/// `qid 0 docid grade`, any whitespace run as separator.
Qrels load_qrels(const std::filesystem::path& path);

void write_collection(const Corpus& corpus, const std::filesystem::path& path);
void write_queries(const QuerySet& queries, const std::filesystem::path& path);
void write_qrels(const Qrels& qrels, const std::filesystem::path& path);

/// TREC run format `qid Q0 docid rank score tag`, scores with 6 decimals.
void write_run(const std::vector<RankedList>& run, std::string_view tag,
               const std::filesystem::path& path);
/// Groups lines by query id in order of first appearance, entries by rank.
std::vector<RankedList> load_run(const std::filesystem::path& path);

}  // namespace cldrd
