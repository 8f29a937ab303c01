#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "reassert/lexer.h"

namespace reassert {

enum class EditAction : std::uint8_t { Insert = 0, Delete = 1, Equal = 2, Replace = 3 };

inline constexpr std::size_t kNumEditActions = 4;

std::string_view action_name(EditAction a);
std::optional<EditAction> parse_action(std::string_view name);

/// One aligned position. `retrieved` is the token from the retrieved
/// focal-test, `input` the token from the query focal-test; an absent slot is
/// the empty token.
struct Edit {
  std::optional<std::string> retrieved;
  std::optional<std::string> input;
  EditAction action = EditAction::Equal;

  friend bool operator==(const Edit&, const Edit&) = default;
};

using EditSequence = std::vector<Edit>;

/// Shortest edit script (Myers) from `retrieved` to `input`. Inside each
/// changed hunk, deleted and inserted runs are paired positionally as Replace;
/// the unpaired tail becomes Delete or Insert.
EditSequence align(const TokenSeq& retrieved, const TokenSeq& input);

enum class Side { Retrieved, Input };

/// The chosen slot of every edit, skipping empty slots.
TokenSeq project(const EditSequence& edits, Side side);

/// Keeps the first `max_len` edits.
void truncate(EditSequence& edits, std::size_t max_len);

/// True when every edit satisfies its action's slot constraints.
bool well_formed(const Edit& e);

/// Token-level Levenshtein distance, unit costs.
std::size_t edit_distance(const TokenSeq& a, const TokenSeq& b);

/// [{"r": token|null, "q": token|null, "a": "equal"|...}, ...]
nlohmann::json edits_to_json(const EditSequence& edits);
EditSequence edits_from_json(const nlohmann::json& j);

}  // namespace reassert
