#pragma once

// Toy corpora of near-duplicate TAPs: each training pair shares one focal-test
// template and differs only in a literal, so a TAP's retrieved neighbour is
// its partner and the assertion edit is visible in the focal-test diff.

#include <string>
#include <vector>

#include "reassert/corpus.h"
#include "reassert/lexer.h"

namespace reassert::testing {

inline const std::vector<std::string>& synthetic_nouns() {
  static const std::vector<std::string> nouns = {
      "Account", "Buffer", "Cache",  "Driver", "Engine", "Filter", "Graph",  "Header", "Index",
      "Job",     "Kernel", "Ledger", "Matrix", "Node",   "Order",  "Parser", "Queue",  "Router",
      "Socket",  "Token",  "User",   "Vector", "Widget", "Schema", "Zone"};
  return nouns;
}

/// Variant v of template i. Kinds cycle: string equality, int equality,
/// boolean, null check, and an assertion that never changes.
inline TAP synthetic_tap(std::int64_t id, std::size_t i, int v) {
  const std::string& cls = synthetic_nouns()[i % synthetic_nouns().size()];
  const std::string var = "obj" + std::to_string(i);
  std::string focal = "@Test public void test" + cls + "() { " + cls + " " + var + " = new " + cls + "(); ";
  std::string assertion;
  static const char* names[] = {"alpha", "beta", "gamma", "delta"};
  switch (i % 5) {
    case 0: {
      std::string lit = "\"" + std::string(names[v]) + "_" + std::to_string(i) + "\"";
      focal += var + ".setLabel(" + lit + "); String result = " + var + ".getLabel(); } "
               "public String getLabel() { return label; }";
      assertion = "assertEquals(" + lit + ", result)";
      break;
    }
    case 1: {
      std::string lit = std::to_string((v + 1) * 1000 + int(i));
      focal += var + ".setCount(" + lit + "); int result = " + var + ".getCount(); } "
               "public int getCount() { return count; }";
      assertion = "assertEquals(" + lit + ", result)";
      break;
    }
    case 2: {
      bool flag = v % 2 == 0;
      focal += var + ".setEnabled(" + std::string(flag ? "true" : "false") + "); boolean result = " + var +
               ".isEnabled(); } public boolean isEnabled() { return enabled; }";
      assertion = flag ? "assertTrue(result)" : "assertFalse(result)";
      break;
    }
    case 3: {
      bool null = v % 2 == 0;
      focal += var + ".setOwner(" + std::string(null ? "null" : "owner") + "); Object result = " + var +
               ".getOwner(); } public Object getOwner() { return owner; }";
      assertion = null ? "assertNull(result)" : "assertNotNull(result)";
      break;
    }
    default: {
      focal += "Object result = " + var + ".build(" + std::to_string(v + 1) + "); } "
               "public Object build(int n) { return new Object(); }";
      assertion = "assertNotNull(result)";
      break;
    }
  }
  return {id, tokenize(focal), tokenize(assertion)};
}

/// 2 * pairs TAPs: variants 0 and 1 of templates 0..pairs-1, ids from 0.
inline std::vector<TAP> synthetic_pairs(std::size_t pairs) {
  std::vector<TAP> out;
  for (std::size_t i = 0; i < pairs; ++i) {
    out.push_back(synthetic_tap(std::int64_t(2 * i), i, 0));
    out.push_back(synthetic_tap(std::int64_t(2 * i + 1), i, 1));
  }
  return out;
}

/// Held-out variants of templates 0..n-1. String and int templates get a new
/// literal unseen in training; the other kinds repeat a training assertion.
inline std::vector<TAP> synthetic_heldout(std::size_t n, std::int64_t first_id) {
  std::vector<TAP> out;
  for (std::size_t i = 0; i < n; ++i) {
    int v = i % 5 < 2 ? 2 : int(i % 2);
    if (i % 5 == 4) v = 2;
    out.push_back(synthetic_tap(first_id + std::int64_t(i), i, v));
  }
  return out;
}

}  // namespace reassert::testing
