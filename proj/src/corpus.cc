#include "reassert/corpus.h"

#include <algorithm>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include "json.hpp"
#include "reassert/error.h"

namespace reassert {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void reject(LoadReport* report, std::size_t line, const std::string& why) {
  if (!report) return;
  ++report->rejected;
  report->reasons.push_back("line " + std::to_string(line) + ": " + why);
}

std::ifstream open_input(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  return in;
}

void strip_cr(std::string& line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
}

std::vector<TAP> load_jsonl(const fs::path& path, LoadReport* report) {
  auto in = open_input(path);
  std::vector<TAP> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    strip_cr(line);
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    json obj;
    try {
      obj = json::parse(line);
    } catch (const json::parse_error& e) {
      throw FormatError(path.string() + ": malformed JSON: " + e.what(),
                        lineno);
    }
    if (!obj.is_object()) {
      throw FormatError(path.string() + ": expected a JSON object", lineno);
    }
    auto id = obj.find("id");
    auto ft = obj.find("focal_test");
    auto as = obj.find("assertion");
    if (id == obj.end() || !id->is_number_integer()) {
      reject(report, lineno, "missing or non-integer \"id\"");
      continue;
    }
    if (ft == obj.end() || !ft->is_string()) {
      reject(report, lineno, "missing \"focal_test\"");
      continue;
    }
    if (as == obj.end() || !as->is_string()) {
      reject(report, lineno, "missing \"assertion\"");
      continue;
    }
    TAP tap;
    tap.id = id->get<std::int64_t>();
    try {
      tap.focal_test = tokenize(ft->get<std::string>());
      tap.assertion = tokenize(as->get<std::string>());
    } catch (const LexError& e) {
      reject(report, lineno, e.what());
      continue;
    }
    if (tap.focal_test.empty()) {
      reject(report, lineno, "empty focal_test");
      continue;
    }
    if (tap.assertion.empty()) {
      reject(report, lineno, "empty assertion");
      continue;
    }
    out.push_back(std::move(tap));
    if (report) ++report->accepted;
  }
  return out;
}

std::vector<TAP> load_parallel(const fs::path& dir, LoadReport* report) {
  auto focal = open_input(dir / "focal.txt");
  auto assertion = open_input(dir / "assertion.txt");
  std::vector<TAP> out;
  std::string fline, aline;
  std::size_t lineno = 0;
  while (true) {
    bool has_f = static_cast<bool>(std::getline(focal, fline));
    bool has_a = static_cast<bool>(std::getline(assertion, aline));
    if (!has_f && !has_a) break;
    ++lineno;
    if (has_f != has_a) {
      throw FormatError(dir.string() + ": focal.txt and assertion.txt have "
                        "different line counts", lineno);
    }
    strip_cr(fline);
    strip_cr(aline);
    TAP tap;
    tap.id = static_cast<std::int64_t>(lineno - 1);
    tap.focal_test = split_whitespace(fline);
    tap.assertion = split_whitespace(aline);
    if (tap.focal_test.empty()) {
      reject(report, lineno, "empty focal_test");
      continue;
    }
    if (tap.assertion.empty()) {
      reject(report, lineno, "empty assertion");
      continue;
    }
    out.push_back(std::move(tap));
    if (report) ++report->accepted;
  }
  return out;
}

void check_unique_ids(const Dataset& d) {
  std::set<std::int64_t> seen;
  for (auto kind : {SplitKind::Train, SplitKind::Validation, SplitKind::Test}) {
    for (const auto& tap : d.split(kind)) {
      if (!seen.insert(tap.id).second) {
        throw FormatError("duplicate TAP id " + std::to_string(tap.id) +
                          " (split " + std::string(split_name(kind)) + ")");
      }
    }
  }
}

// Parallel-text ids are line numbers per split; offset later splits so ids
// stay disjoint across the dataset.
void renumber_after(std::vector<TAP>& taps, std::int64_t& next) {
  for (auto& tap : taps) tap.id = next++;
}

}  // namespace

const std::vector<TAP>& Dataset::split(SplitKind kind) const {
  switch (kind) {
    case SplitKind::Train: return train;
    case SplitKind::Validation: return validation;
    case SplitKind::Test: return test;
  }
  return train;
}

std::vector<TAP>& Dataset::split(SplitKind kind) {
  return const_cast<std::vector<TAP>&>(std::as_const(*this).split(kind));
}

std::optional<DataFormat> parse_data_format(std::string_view name) {
  if (name == "jsonl") return DataFormat::Jsonl;
  if (name == "text" || name == "parallel-text") return DataFormat::ParallelText;
  return std::nullopt;
}

std::optional<SplitKind> parse_split_kind(std::string_view name) {
  if (name == "train") return SplitKind::Train;
  if (name == "valid" || name == "validation") return SplitKind::Validation;
  if (name == "test") return SplitKind::Test;
  return std::nullopt;
}

std::string_view split_name(SplitKind kind) {
  switch (kind) {
    case SplitKind::Train: return "train";
    case SplitKind::Validation: return "valid";
    case SplitKind::Test: return "test";
  }
  return "?";
}

std::vector<TAP> load_split(const fs::path& path, DataFormat format,
                            LoadReport* report) {
  if (!fs::exists(path)) throw Error("no such file: " + path.string());
  return format == DataFormat::Jsonl ? load_jsonl(path, report)
                                     : load_parallel(path, report);
}

Dataset load_dataset(const fs::path& path, DataFormat format,
                     LoadReport* report) {
  if (!fs::exists(path)) throw Error("no such file: " + path.string());
  Dataset d;
  d.name = path.filename().string();
  bool single = format == DataFormat::Jsonl
                    ? fs::is_regular_file(path)
                    : fs::exists(path / "focal.txt");
  if (single) {
    d.train = load_split(path, format, report);
  } else {
    for (auto kind : {SplitKind::Train, SplitKind::Validation, SplitKind::Test}) {
      fs::path p = path / std::string(split_name(kind));
      if (format == DataFormat::Jsonl) p += ".jsonl";
      if (fs::exists(p)) d.split(kind) = load_split(p, format, report);
    }
    if (format == DataFormat::ParallelText) {
      std::int64_t next = 0;
      renumber_after(d.train, next);
      renumber_after(d.validation, next);
      renumber_after(d.test, next);
    }
  }
  check_unique_ids(d);
  return d;
}

void write_split(const std::vector<TAP>& taps, const fs::path& path,
                 DataFormat format) {
  auto open_out = [](const fs::path& p) {
    std::ofstream out(p, std::ios::binary);
    if (!out) throw Error("cannot write " + p.string());
    return out;
  };
  if (format == DataFormat::Jsonl) {
    auto out = open_out(path);
    for (const auto& tap : taps) {
      json obj = {{"id", tap.id},
                  {"focal_test", join_tokens(tap.focal_test)},
                  {"assertion", join_tokens(tap.assertion)}};
      out << obj.dump() << '\n';
    }
    return;
  }
  fs::create_directories(path);
  auto focal = open_out(path / "focal.txt");
  auto assertion = open_out(path / "assertion.txt");
  for (const auto& tap : taps) {
    focal << join_tokens(tap.focal_test) << '\n';
    assertion << join_tokens(tap.assertion) << '\n';
  }
}

Dataset split_8_1_1(std::vector<TAP> taps, std::uint64_t seed, std::string name) {
  std::mt19937_64 rng(seed);
  // Fisher-Yates on raw engine output.
  for (std::size_t i = taps.size(); i > 1; --i) {
    std::size_t j = rng() % i;
    std::swap(taps[i - 1], taps[j]);
  }
  std::size_t n = taps.size();
  std::size_t n_valid = n / 10;
  std::size_t n_test = n / 10;
  std::size_t n_train = n - n_valid - n_test;
  Dataset d;
  d.name = std::move(name);
  auto it = std::make_move_iterator(taps.begin());
  d.train.assign(it, it + n_train);
  d.validation.assign(it + n_train, it + n_train + n_valid);
  d.test.assign(it + n_train + n_valid, std::make_move_iterator(taps.end()));
  return d;
}

std::string_view assert_type_name(AssertType type) {
  switch (type) {
    case AssertType::Equals: return "Equals";
    case AssertType::True: return "True";
    case AssertType::That: return "That";
    case AssertType::NotNull: return "NotNull";
    case AssertType::False: return "False";
    case AssertType::Null: return "Null";
    case AssertType::ArrayEquals: return "ArrayEquals";
    case AssertType::Same: return "Same";
    case AssertType::Other: return "Other";
  }
  return "Other";
}

AssertType classify_assertion(const TokenSeq& assertion) {
  static const std::pair<std::string_view, AssertType> kSuffixes[] = {
      {"Equals", AssertType::Equals},   {"True", AssertType::True},
      {"That", AssertType::That},       {"NotNull", AssertType::NotNull},
      {"False", AssertType::False},     {"Null", AssertType::Null},
      {"ArrayEquals", AssertType::ArrayEquals}, {"Same", AssertType::Same}};
  for (const auto& token : assertion) {
    if (!token.starts_with("assert")) continue;
    std::string_view suffix = std::string_view(token).substr(6);
    for (const auto& [name, type] : kSuffixes) {
      if (suffix == name) return type;
    }
    return AssertType::Other;
  }
  return AssertType::Other;
}

SplitStats split_stats(const std::vector<TAP>& taps) {
  SplitStats s;
  s.size = taps.size();
  for (auto type : kAllAssertTypes) s.type_counts[type] = 0;
  for (const auto& tap : taps) {
    ++s.length_histogram[tap.assertion.size()];
    ++s.type_counts[classify_assertion(tap.assertion)];
  }
  return s;
}

DatasetStats split_stats(const Dataset& d) {
  return {split_stats(d.train), split_stats(d.validation), split_stats(d.test)};
}

}  // namespace reassert
