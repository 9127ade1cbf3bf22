#include "cldrd/teacher.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include "cldrd/featurizer.hpp"
#include "cldrd/rng.hpp"

namespace cldrd {

OracleTeacher::OracleTeacher(Qrels grades, double noise_scale, std::uint64_t seed)
    : grades_(std::move(grades)), noise_scale_(noise_scale), seed_(seed) {
  if (!(noise_scale >= 0.0) || !std::isfinite(noise_scale)) {
    throw ConfigError("oracle noise scale must be finite and >= 0");
  }
}

double OracleTeacher::noise(std::string_view query_id, std::string_view doc_id) const {
  Rng rng(derive_seed(seed_, query_id, doc_id));
  return rng.normal();
}

double OracleTeacher::score(const Query& query, const Document& doc) const {
  const double grade = grades_.grade(query.id, doc.id).value_or(0);
  if (noise_scale_ == 0.0) return grade;
  return grade + noise_scale_ * noise(query.id, doc.id);
}

void FileTeacher::add(const std::string& query_id, const std::string& doc_id, double score) {
  if (!scores_.emplace(Key{query_id, doc_id}, score).second) {
    throw IntegrityError("duplicate teacher score for (" + query_id + ", " + doc_id + ")");
  }
}

FileTeacher FileTeacher::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  FileTeacher teacher;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto t1 = line.find('\t');
    const auto t2 = t1 == std::string::npos ? t1 : line.find('\t', t1 + 1);
    if (t2 == std::string::npos || line.find('\t', t2 + 1) != std::string::npos) {
      throw ParseError(path.string(), line_no, "expected 'qid<TAB>docid<TAB>score'");
    }
    std::istringstream is(line.substr(t2 + 1));
    is.imbue(std::locale::classic());
    double value = 0.0;
    if (!(is >> value) || !is.eof() || !std::isfinite(value)) {
      throw ParseError(path.string(), line_no, "invalid score");
    }
    try {
      teacher.add(line.substr(0, t1), line.substr(t1 + 1, t2 - t1 - 1), value);
    } catch (const IntegrityError& e) {
      throw IntegrityError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return teacher;
}

double FileTeacher::score(const Query& query, const Document& doc) const {
  auto it = scores_.find(Key{query.id, doc.id});
  if (it == scores_.end()) {
    throw LookupError("no teacher score for (" + query.id + ", " + doc.id + ")");
  }
  return it->second;
}

LexicalTeacher::LexicalTeacher(const Corpus& corpus, double k1, double b) : k1_(k1), b_(b) {
  double total_length = 0.0;
  for (const auto& doc : corpus) {
    const auto words = split_words(doc.text);
    total_length += static_cast<double>(words.size());
    std::unordered_set<std::string> distinct(words.begin(), words.end());
    for (const auto& w : distinct) ++doc_freq_[w];
  }
  doc_count_ = static_cast<double>(corpus.size());
  avg_length_ = corpus.empty() ? 0.0 : total_length / doc_count_;
}

double LexicalTeacher::idf(std::string_view word) const {
  auto it = doc_freq_.find(std::string(word));
  const double df = it == doc_freq_.end() ? 0.0 : static_cast<double>(it->second);
  return std::log((doc_count_ - df + 0.5) / (df + 0.5) + 1.0);
}

double LexicalTeacher::score(const Query& query, const Document& doc) const {
  const auto doc_words = split_words(doc.text);
  std::unordered_map<std::string, double> tf;
  for (const auto& w : doc_words) tf[w] += 1.0;
  const double length = static_cast<double>(doc_words.size());
  const double norm =
      avg_length_ > 0.0 ? k1_ * (1.0 - b_ + b_ * length / avg_length_) : k1_;

  const auto query_words = split_words(query.text);
  std::unordered_set<std::string> distinct(query_words.begin(), query_words.end());
  double total = 0.0;
  // Sum over distinct query words in a fixed order.
  for (const auto& w : query_words) {
    if (distinct.erase(w) == 0) continue;
    auto it = tf.find(w);
    if (it == tf.end()) continue;
    const double f = it->second;
    total += idf(w) * f * (k1_ + 1.0) / (f + norm);
  }
  return total;
}

RankedList rerank(const Teacher& teacher, const Query& query, const RankedList& candidates,
                  const Corpus& corpus) {
  std::vector<std::pair<std::string, double>> scored;
  scored.reserve(candidates.size());
  for (const auto& e : candidates.entries) {
    const Document* doc = corpus.find(e.doc_id);
    if (doc == nullptr && teacher.needs_text()) {
      throw LookupError("candidate '" + e.doc_id + "' not in corpus");
    }
    const double s = doc ? teacher.score(query, *doc) : teacher.score(query, Document{e.doc_id, {}});
    scored.emplace_back(e.doc_id, s);
  }
  return sort_into_ranked_list(query.id, std::move(scored));
}

}  // namespace cldrd
