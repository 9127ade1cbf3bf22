#include "cldrd/data_model.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <unordered_set>

namespace cldrd {

namespace {

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  return in;
}

std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  return out;
}

void finish(std::ofstream& out, const std::filesystem::path& path) {
  out.flush();
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

std::vector<std::string_view> split_whitespace(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    std::size_t j = i;
    while (j < line.size() && !std::isspace(static_cast<unsigned char>(line[j]))) ++j;
    if (j > i) fields.push_back(line.substr(i, j - i));
    i = j;
  }
  return fields;
}

bool is_blank(std::string_view line) {
  return std::all_of(line.begin(), line.end(),
                     [](char c) { return std::isspace(static_cast<unsigned char>(c)); });
}

template <typename Number>
std::optional<Number> parse_number(std::string_view text) {
  Number value{};
  const char* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end) return std::nullopt;
  return value;
}

template <typename Item>
TextCollection<Item> load_tsv_texts(const std::filesystem::path& path) {
  std::ifstream in = open_input(path);
  TextCollection<Item> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto tab = line.find('\t');
    if (tab == std::string::npos || line.find('\t', tab + 1) != std::string::npos) {
      throw ParseError(path.string(), line_no, "expected exactly 2 tab-separated fields");
    }
    if (tab == 0) throw ParseError(path.string(), line_no, "empty id");
    try {
      out.add(Item{line.substr(0, tab), line.substr(tab + 1)});
    } catch (const IntegrityError& e) {
      throw IntegrityError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

template <typename Item>
void write_tsv_texts(const TextCollection<Item>& items, const std::filesystem::path& path) {
  std::ofstream out = open_output(path);
  for (const auto& item : items) {
    if (item.text.find_first_of("\t\n") != std::string::npos) {
      throw IntegrityError("text of '" + item.id + "' contains a tab or newline");
    }
    out << item.id << '\t' << item.text << '\n';
  }
  finish(out, path);
}

}  // namespace

void Qrels::add(const std::string& query_id, const std::string& doc_id, int grade) {
  if (grade < 0) throw IntegrityError("negative grade for (" + query_id + ", " + doc_id + ")");
  auto& grades = by_query_[query_id];
  if (!grades.emplace(doc_id, grade).second) {
    throw IntegrityError("duplicate judgment for (" + query_id + ", " + doc_id + ")");
  }
  ++count_;
}

std::optional<int> Qrels::grade(std::string_view query_id, std::string_view doc_id) const {
  const Grades* grades = for_query(query_id);
  if (grades == nullptr) return std::nullopt;
  auto it = grades->find(std::string(doc_id));
  if (it == grades->end()) return std::nullopt;
  return it->second;
}

const Qrels::Grades* Qrels::for_query(std::string_view query_id) const {
  auto it = by_query_.find(query_id);
  return it == by_query_.end() ? nullptr : &it->second;
}

void validate(const RankedList& list) {
  std::unordered_set<std::string_view> seen;
  for (std::size_t i = 0; i < list.entries.size(); ++i) {
    const auto& e = list.entries[i];
    if (e.rank != i + 1) {
      throw IntegrityError("query " + list.query_id + ": rank " + std::to_string(e.rank) +
                           " at position " + std::to_string(i + 1));
    }
    if (i > 0 && e.score > list.entries[i - 1].score) {
      throw IntegrityError("query " + list.query_id + ": score increases at rank " +
                           std::to_string(e.rank));
    }
    if (!seen.insert(e.doc_id).second) {
      throw IntegrityError("query " + list.query_id + ": duplicate doc " + e.doc_id);
    }
  }
}

RankedList make_ranked_list(std::string query_id,
                            std::vector<std::pair<std::string, double>> ordered) {
  RankedList list{std::move(query_id), {}};
  list.entries.reserve(ordered.size());
  for (std::size_t i = 0; i < ordered.size(); ++i) {
    list.entries.push_back({std::move(ordered[i].first), ordered[i].second, i + 1});
  }
  return list;
}

RankedList sort_into_ranked_list(std::string query_id,
                                 std::vector<std::pair<std::string, double>> scored) {
  std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  return make_ranked_list(std::move(query_id), std::move(scored));
}

Corpus load_collection(const std::filesystem::path& path) {
  return load_tsv_texts<Document>(path);
}

QuerySet load_queries(const std::filesystem::path& path) {
  return load_tsv_texts<Query>(path);
}

Qrels load_qrels(const std::filesystem::path& path) {
  std::ifstream in = open_input(path);
  Qrels qrels;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (is_blank(line)) continue;
    const auto fields = split_whitespace(line);
    if (fields.size() != 4) {
      throw ParseError(path.string(), line_no, "expected 4 fields 'qid 0 docid grade'");
    }
    const auto grade = parse_number<int>(fields[3]);
    if (!grade) throw ParseError(path.string(), line_no, "non-integer grade");
    if (*grade < 0) throw ParseError(path.string(), line_no, "negative grade");
    try {
      qrels.add(std::string(fields[0]), std::string(fields[2]), *grade);
    } catch (const IntegrityError& e) {
      throw IntegrityError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return qrels;
}

void write_collection(const Corpus& corpus, const std::filesystem::path& path) {
  write_tsv_texts(corpus, path);
}

void write_queries(const QuerySet& queries, const std::filesystem::path& path) {
  write_tsv_texts(queries, path);
}

void write_qrels(const Qrels& qrels, const std::filesystem::path& path) {
  std::ofstream out = open_output(path);
  for (const auto& [qid, grades] : qrels.queries()) {
    for (const auto& [docid, grade] : grades) out << qid << " 0 " << docid << ' ' << grade << '\n';
  }
  finish(out, path);
}

void write_run(const std::vector<RankedList>& run, std::string_view tag,
               const std::filesystem::path& path) {
  std::ofstream out = open_output(path);
  char score[64];
  for (const auto& list : run) {
    validate(list);
    for (const auto& e : list.entries) {
      std::snprintf(score, sizeof score, "%.6f", e.score);
      out << list.query_id << " Q0 " << e.doc_id << ' ' << e.rank << ' ' << score << ' ' << tag
          << '\n';
    }
  }
  finish(out, path);
}

std::vector<RankedList> load_run(const std::filesystem::path& path) {
  std::ifstream in = open_input(path);
  std::vector<RankedList> run;
  std::unordered_map<std::string, std::size_t> slot;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (is_blank(line)) continue;
    const auto fields = split_whitespace(line);
    if (fields.size() != 6) {
      throw ParseError(path.string(), line_no, "expected 6 fields 'qid Q0 docid rank score tag'");
    }
    const auto rank = parse_number<std::size_t>(fields[3]);
    if (!rank || *rank == 0) throw ParseError(path.string(), line_no, "invalid rank");
    double score = 0.0;
    {
      std::istringstream is{std::string(fields[4])};
      is.imbue(std::locale::classic());
      if (!(is >> score) || !is.eof()) throw ParseError(path.string(), line_no, "invalid score");
    }
    const std::string qid(fields[0]);
    auto [it, inserted] = slot.emplace(qid, run.size());
    if (inserted) run.push_back(RankedList{qid, {}});
    run[it->second].entries.push_back({std::string(fields[2]), score, *rank});
  }
  for (auto& list : run) {
    std::sort(list.entries.begin(), list.entries.end(),
              [](const RankedEntry& a, const RankedEntry& b) { return a.rank < b.rank; });
    validate(list);
  }
  return run;
}

}  // namespace cldrd
