#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "reassert/lexer.h"

namespace reassert {

/// Test-assert pair: a focal-test (test prefix + focal method) and the single
/// assertion written for it.
struct TAP {
  std::int64_t id = 0;
  TokenSeq focal_test;
  TokenSeq assertion;

  friend bool operator==(const TAP&, const TAP&) = default;
};

enum class SplitKind { Train, Validation, Test };

struct Dataset {
  std::string name;
  std::vector<TAP> train;
  std::vector<TAP> validation;
  std::vector<TAP> test;

  const std::vector<TAP>& split(SplitKind kind) const;
  std::vector<TAP>& split(SplitKind kind);
};

enum class DataFormat { Jsonl, ParallelText };

std::optional<DataFormat> parse_data_format(std::string_view name);
std::optional<SplitKind> parse_split_kind(std::string_view name);
std::string_view split_name(SplitKind kind);

/// Records dropped during ingestion, with a reason per record.
struct LoadReport {
  std::size_t accepted = 0;
  std::size_t rejected = 0;
  std::vector<std::string> reasons;
};

/// Loads one split. For jsonl, `path` is the .jsonl file; for parallel text it
/// is a directory holding focal.txt and assertion.txt. Malformed JSON or a
/// line-count mismatch throws FormatError; schema violations, empty sequences
/// and lex errors reject the record and are counted in `report`.
std::vector<TAP> load_split(const std::filesystem::path& path,
                            DataFormat format, LoadReport* report = nullptr);

/// Loads a dataset directory. jsonl layout: train.jsonl, valid.jsonl,
/// test.jsonl. Parallel layout: train/, valid/, test/ each with focal.txt and
/// assertion.txt. Missing splits load empty. A path that is itself a single
/// split (a .jsonl file, or a directory with focal.txt) becomes the train split.
/// Throws if ids collide within or across splits.
Dataset load_dataset(const std::filesystem::path& path, DataFormat format,
                     LoadReport* report = nullptr);

/// Writes tokens joined by single spaces. Parallel text cannot represent
/// tokens that contain whitespace (string literals); jsonl can.
void write_split(const std::vector<TAP>& taps, const std::filesystem::path& path,
                 DataFormat format);

/// Deterministic shuffle-and-split into train/validation/test at 8:1:1.
Dataset split_8_1_1(std::vector<TAP> taps, std::uint64_t seed,
                    std::string name = {});

enum class AssertType {
  Equals,
  True,
  That,
  NotNull,
  False,
  Null,
  ArrayEquals,
  Same,
  Other
};

inline constexpr std::array<AssertType, 9> kAllAssertTypes = {
    AssertType::Equals,  AssertType::True,        AssertType::That,
    AssertType::NotNull, AssertType::False,       AssertType::Null,
    AssertType::ArrayEquals, AssertType::Same,    AssertType::Other};

std::string_view assert_type_name(AssertType type);

/// Category from the first token starting with "assert" (qualified calls such
/// as Assert.assertEquals are found by scanning every token).
AssertType classify_assertion(const TokenSeq& assertion);

struct SplitStats {
  std::size_t size = 0;
  std::map<std::size_t, std::size_t> length_histogram;
  std::map<AssertType, std::size_t> type_counts;
};

SplitStats split_stats(const std::vector<TAP>& taps);

struct DatasetStats {
  SplitStats train, validation, test;
};

DatasetStats split_stats(const Dataset& d);

}  // namespace reassert
