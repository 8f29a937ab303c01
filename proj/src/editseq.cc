#include "reassert/editseq.h"

#include <algorithm>

#include "reassert/error.h"

namespace reassert {
namespace {

enum class Op : std::uint8_t { Keep, Del, Ins };

struct Step {
  Op op;
  std::size_t a;  // index into retrieved (Keep, Del)
  std::size_t b;  // index into input (Keep, Ins)
};

// Myers' greedy O((N+M)D) shortest edit script over [a_lo, a_hi) x [b_lo, b_hi).
void myers(const TokenSeq& a, std::size_t a_lo, std::size_t a_hi,
           const TokenSeq& b, std::size_t b_lo, std::size_t b_hi,
           std::vector<Step>& out) {
  const long n = static_cast<long>(a_hi - a_lo);
  const long m = static_cast<long>(b_hi - b_lo);
  auto eq = [&](long x, long y) { return a[a_lo + x] == b[b_lo + y]; };

  // trace[d][k + d] = furthest x reached on diagonal k after d edits.
  std::vector<std::vector<long>> trace;
  long final_d = -1;
  for (long d = 0; final_d < 0; ++d) {
    std::vector<long> v(2 * d + 1);
    const std::vector<long>* prev = d > 0 ? &trace.back() : nullptr;
    auto vp = [&](long k) { return (*prev)[k + d - 1]; };
    for (long k = -d; k <= d; k += 2) {
      long x;
      if (d == 0) {
        x = 0;
      } else if (k == -d || (k != d && vp(k - 1) < vp(k + 1))) {
        x = vp(k + 1);
      } else {
        x = vp(k - 1) + 1;
      }
      long y = x - k;
      while (x < n && y < m && eq(x, y)) {
        ++x;
        ++y;
      }
      v[k + d] = x;
      if (x >= n && y >= m) {
        final_d = d;
        break;
      }
    }
    trace.push_back(std::move(v));
  }

  std::vector<Step> rev;
  long x = n, y = m;
  for (long d = final_d; d > 0; --d) {
    const auto& prev = trace[d - 1];
    auto vp = [&](long k) { return prev[k + d - 1]; };
    long k = x - y;
    bool down = k == -d || (k != d && vp(k - 1) < vp(k + 1));
    long prev_k = down ? k + 1 : k - 1;
    long prev_x = vp(prev_k);
    long prev_y = prev_x - prev_k;
    long snake_x = down ? prev_x : prev_x + 1;
    while (x > snake_x) {
      --x;
      --y;
      rev.push_back({Op::Keep, a_lo + x, b_lo + y});
    }
    if (down) {
      rev.push_back({Op::Ins, 0, b_lo + prev_y});
    } else {
      rev.push_back({Op::Del, a_lo + prev_x, 0});
    }
    x = prev_x;
    y = prev_y;
  }
  while (x > 0 && y > 0) {
    --x;
    --y;
    rev.push_back({Op::Keep, a_lo + x, b_lo + y});
  }
  out.insert(out.end(), rev.rbegin(), rev.rend());
}

std::vector<Step> shortest_script(const TokenSeq& a, const TokenSeq& b) {
  std::size_t pre = 0;
  while (pre < a.size() && pre < b.size() && a[pre] == b[pre]) ++pre;
  std::size_t suf = 0;
  while (suf < a.size() - pre && suf < b.size() - pre &&
         a[a.size() - 1 - suf] == b[b.size() - 1 - suf]) {
    ++suf;
  }
  std::vector<Step> steps;
  for (std::size_t i = 0; i < pre; ++i) steps.push_back({Op::Keep, i, i});
  myers(a, pre, a.size() - suf, b, pre, b.size() - suf, steps);
  for (std::size_t i = 0; i < suf; ++i) {
    steps.push_back({Op::Keep, a.size() - suf + i, b.size() - suf + i});
  }
  return steps;
}

}  // namespace

std::string_view action_name(EditAction a) {
  switch (a) {
    case EditAction::Insert: return "insert";
    case EditAction::Delete: return "delete";
    case EditAction::Equal: return "equal";
    case EditAction::Replace: return "replace";
  }
  return "?";
}

std::optional<EditAction> parse_action(std::string_view name) {
  for (auto a : {EditAction::Insert, EditAction::Delete, EditAction::Equal,
                 EditAction::Replace}) {
    if (name == action_name(a)) return a;
  }
  return std::nullopt;
}

EditSequence align(const TokenSeq& retrieved, const TokenSeq& input) {
  auto steps = shortest_script(retrieved, input);
  EditSequence out;
  out.reserve(steps.size());
  std::size_t i = 0;
  while (i < steps.size()) {
    if (steps[i].op == Op::Keep) {
      const auto& tok = retrieved[steps[i].a];
      out.push_back({tok, tok, EditAction::Equal});
      ++i;
      continue;
    }
    std::vector<std::size_t> dels, ins;
    for (; i < steps.size() && steps[i].op != Op::Keep; ++i) {
      if (steps[i].op == Op::Del) {
        dels.push_back(steps[i].a);
      } else {
        ins.push_back(steps[i].b);
      }
    }
    std::size_t paired = std::min(dels.size(), ins.size());
    for (std::size_t p = 0; p < paired; ++p) {
      out.push_back({retrieved[dels[p]], input[ins[p]], EditAction::Replace});
    }
    for (std::size_t p = paired; p < dels.size(); ++p) {
      out.push_back({retrieved[dels[p]], std::nullopt, EditAction::Delete});
    }
    for (std::size_t p = paired; p < ins.size(); ++p) {
      out.push_back({std::nullopt, input[ins[p]], EditAction::Insert});
    }
  }
  return out;
}

TokenSeq project(const EditSequence& edits, Side side) {
  TokenSeq out;
  for (const auto& e : edits) {
    const auto& slot = side == Side::Retrieved ? e.retrieved : e.input;
    if (slot) out.push_back(*slot);
  }
  return out;
}

void truncate(EditSequence& edits, std::size_t max_len) {
  if (edits.size() > max_len) edits.resize(max_len);
}

bool well_formed(const Edit& e) {
  switch (e.action) {
    case EditAction::Equal:
      return e.retrieved && e.input && *e.retrieved == *e.input;
    case EditAction::Replace:
      return e.retrieved && e.input && *e.retrieved != *e.input;
    case EditAction::Insert:
      return !e.retrieved && e.input;
    case EditAction::Delete:
      return e.retrieved && !e.input;
  }
  return false;
}

std::size_t edit_distance(const TokenSeq& a, const TokenSeq& b) {
  std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      std::size_t sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      cur[j] = std::min({sub, prev[j] + 1, cur[j - 1] + 1});
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

nlohmann::json edits_to_json(const EditSequence& edits) {
  auto arr = nlohmann::json::array();
  for (const auto& e : edits) {
    nlohmann::json obj;
    obj["r"] = e.retrieved ? nlohmann::json(*e.retrieved) : nlohmann::json();
    obj["q"] = e.input ? nlohmann::json(*e.input) : nlohmann::json();
    obj["a"] = std::string(action_name(e.action));
    arr.push_back(std::move(obj));
  }
  return arr;
}

EditSequence edits_from_json(const nlohmann::json& j) {
  if (!j.is_array()) throw FormatError("edit sequence must be a JSON array");
  EditSequence out;
  for (const auto& obj : j) {
    Edit e;
    auto slot = [&](const char* key) -> std::optional<std::string> {
      const auto& v = obj.at(key);
      if (v.is_null()) return std::nullopt;
      return v.get<std::string>();
    };
    e.retrieved = slot("r");
    e.input = slot("q");
    auto action = parse_action(obj.at("a").get<std::string>());
    if (!action) throw FormatError("unknown edit action");
    e.action = *action;
    if (!well_formed(e)) throw FormatError("edit violates its action's slot rules");
    out.push_back(std::move(e));
  }
  return out;
}

}  // namespace reassert
