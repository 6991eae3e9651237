#pragma once

// Slot values that reproduce the three reference prompts in tests/golden.

#include <fstream>
#include <sstream>
#include <string>

#include "recov/llm_backend.hpp"

namespace recov::fixtures {

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline std::string golden(const std::string& name) {
  return read_file(std::string(RECOV_SOURCE_DIR) + "/tests/golden/" + name);
}

inline const char* kStampedRef = "java.util.concurrent.atomic.AtomicStampedReference";
inline const char* kStampedPair = "java.util.concurrent.atomic.AtomicStampedReference$Pair";

inline ObjectGraph atomic_ref_graph(const std::string& reference) {
  GraphNode leaf{"reference", "String", reference, {}};
  GraphNode pair{"pair", kStampedPair, "", {leaf}};
  return ObjectGraph{"atomicRef", GraphNode{"atomicRef", kStampedRef, "", {pair}}};
}

inline ReferencePath focal() { return ReferencePath::root("atomicRef").field("pair").field("reference"); }

inline RecoveryRequest recovery_request() {
  RecoveryRequest r;
  r.root_name = "atomicRef";
  r.root_value = "{pair={}, }";
  r.root_type = kStampedRef;
  r.step_code = "Integer value = atomicRef.getReference();";
  r.focal_path = focal();
  r.class_structures = {std::string(kStampedRef) + ":{" + kStampedPair + " pair;}"};
  return r;
}

inline AliasPromptInput alias_input() {
  AliasPromptInput in;
  in.code = "AtomicStampedReference<Integer> atomicRef = new AtomicStampedReference<>(initialRef, initialStamp);";
  in.callee_source =
      "public AtomicStampedReference(V initialRef, int initialStamp) {\n"
      "    this.pair = Pair.of(initialRef, initialStamp);\n}";
  in.variables = {{"initialRef", "java.lang.Integer"},
                  {"initialStamp", "int"},
                  {"AtomicStampedReference_instance", kStampedRef},
                  {"atomicRef", kStampedRef}};
  in.field_listings = {{"initialRef", {}}, {"AtomicStampedReference_instance", {{"pair", kStampedPair}}}};
  in.root_name = "atomicRef";
  in.known_graph = atomic_ref_graph("42");
  in.root_aliases_in_code = {"AtomicStampedReference_instance", "atomicRef"};
  auto root = ReferencePath::root("atomicRef");
  in.fields_of_interest = {root, root.field("pair"), focal()};
  return in;
}

inline DefPromptInput def_input() {
  DefPromptInput in;
  in.target_code = "boolean updated = atomicRef.compareAndSet(expectedRef, newRef, expectedStamp, newStamp);";
  in.callee_source =
      "public boolean compareAndSet(V expectedReference, V newReference, int expectedStamp, int newStamp) {\n"
      "    Pair<V> current = this.pair;\n"
      "    return expectedReference == current.reference && expectedStamp == current.stamp && (newReference == "
      "current.reference && newStamp == current.stamp || this.casPair(current, Pair.of(newReference, newStamp)));\n}";
  in.variables = {{"newRef", "java.lang.Integer", "200"},
                  {"newStamp", "int", "2"},
                  {"expectedRef", "java.lang.Integer", "100"},
                  {"expectedStamp", "int", "1"},
                  {"atomicRef", kStampedRef,
                   render_graph_json(atomic_ref_graph("null"), RootKeyStyle::name_and_type, -1)}};
  in.root_name = "atomicRef";
  in.known_graph = atomic_ref_graph("42");
  in.usage_code = "Integer value = atomicRef.getReference();";
  in.field = focal();
  return in;
}

}  // namespace recov::fixtures
