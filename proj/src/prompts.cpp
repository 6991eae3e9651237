#include "prompt_text.inc"
#include "recov/llm_backend.hpp"

namespace recov {

namespace {

std::string bullets(const std::vector<std::string>& items) {
  if (items.empty()) return "- ";
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) out += '\n';
    out += "- `" + items[i] + "`";
  }
  return out;
}

std::string source_or_placeholder(const std::optional<std::string>& source) {
  return source && !source->empty() ? *source : "(source not available)";
}

void require(const std::string& value, const char* slot) {
  if (value.empty()) throw SlotMissing(std::string("prompt slot '") + slot + "' is empty");
}

}  // namespace

std::string render_example_input(const std::string& value, const std::string& type_name,
                                 const std::vector<std::string>& class_structures,
                                 const std::string& focal_path) {
  return "**Focal Variable toString Value:**\n`" + value + "`\n\n**Focal Variable Type Name:**\n`" +
         type_name + "`\n\n**Related Class Structures:**\n" + bullets(class_structures) +
         "\n\n\n**Focal Variable Path:**\n`" + focal_path + "`";
}

std::string render_example_output(const ObjectGraph& graph) {
  return "```json\n" + render_graph_json(graph, RootKeyStyle::name_only, 2) + "\n```";
}

std::string build_recovery_prompt(const RecoveryRequest& req) {
  require(req.root_name, "root_name");
  require(req.root_type, "root_type");
  require(req.step_code, "step_code");
  const std::string focal = req.focal_path ? render_path(*req.focal_path) : kAllFieldsSentinel;
  std::string out = prompt_text::kRecoveryIntro;
  if (req.adaptive_example) {
    out += req.adaptive_example->input_block + "\n\n**Expected Output:**\n" +
           req.adaptive_example->output_block + "\n\n";
  } else {
    out += std::string(prompt_text::kRecoveryExampleInput) + "\n\n**Expected Output:**\n" +
           prompt_text::kRecoveryExampleOutput + "\n\n";
  }
  out += "## Task\n\n**Focal Variable Name:**\n`" + req.root_name + "`\n\n**Focal Variable Type Name:**\n`" +
         req.root_type + "`\n\n**Focal Variable toString Value:**\n`" + req.root_value +
         "`\n\n**Focal Variable Path:**\n`" + focal + "`\n\n**Related Class Structures:**\n" +
         bullets(req.class_structures) + "\n\n\n**Line of Code Containing the Variable:**\n```java\n" +
         req.step_code + "\n```\n\n**Output:**";
  return out;
}

std::string build_alias_prompt(const AliasPromptInput& in) {
  require(in.code, "code");
  require(in.root_name, "root_name");
  std::string out = prompt_text::kAliasIntro;
  out += "<Question>\nGiven code:\n```" + in.code + "```\n\nGiven the source code of function calls in the code:\n" +
         source_or_placeholder(in.callee_source) + "\n\nVariables involved in the line of code:\n";
  for (const auto& [name, type] : in.variables) out += "`" + name + "` is of type `" + type + "`,\n";
  out += "\n";
  if (!in.field_listings.empty()) {
    for (const auto& listing : in.field_listings) {
      out += "`" + listing.variable + "` has the following fields:";
      if (!listing.fields.empty()) {
        out += " {";
        for (const auto& [field, type] : listing.fields) out += "\"" + field + "\":\"" + type + "\",";
        out += "},";
      }
      out += "\n";
    }
    out += "\n";
  }
  out +=
      "If a variable has name of format `<TYPE>_instance`, it refers to the instance created by calling the "
      "constructor of `<TYPE>`.\nIf a variable has name of format `return_of_<method_signature>`, it refers to "
      "the variable returned by a method call of `<method_signature>`.\n\n";
  out += "We know that another variable not in the code, `" + in.root_name + "`, with the following structure:\n" +
         render_graph_json(in.known_graph, RootKeyStyle::name_and_type, -1) + "\n";
  if (!in.root_aliases_in_code.empty()) {
    out += "where\n";
    for (const auto& alias : in.root_aliases_in_code)
      out += "this `" + in.root_name + "` has the same memory address as `" + alias + "` in the line of code,\n";
  }
  out += "\n";
  if (!in.fields_of_interest.empty()) {
    out += "We are interested in the fields of this instance: ";
    for (const auto& f : in.fields_of_interest) out += "`" + render_path(f) + "`,";
    out += "\n\n";
  }
  out += "From the given code, identify all the aliases of this `" + in.root_name + "` and the fields in this `" +
         in.root_name +
         "`.\n\nIn your response, strictly follow the JSON format. The JSON keys are from the listed fields, JSON "
         "values are variables or their fields that are the corresponding aliases of the fields. Do not include "
         "explanation.";
  return out;
}

std::string build_def_prompt(const DefPromptInput& in) {
  require(in.target_code, "target_code");
  require(in.usage_code, "usage_code");
  require(in.root_name, "root_name");
  const std::string field = render_path(in.field);
  std::string out = prompt_text::kDefIntro;
  out += "### Question:\n**Target Line:**\n`" + in.target_code + "`\n\n**Function Calls in Source Code:**\n" +
         source_or_placeholder(in.callee_source) + "\n\n**Variables Involved:**\n\n";
  for (std::size_t i = 0; i < in.variables.size(); ++i) {
    const auto& v = in.variables[i];
    if (i) out += "\n";
    out += "Variable: \n`" + v.name + "`\nVariable Type: \n`" + v.type_name + "`\nRuntime Value: \n`" + v.value + "`";
  }
  out += "\n\n\nWe know that `" + in.root_name + "` has the following structure and value:\n" +
         render_graph_json(in.known_graph, RootKeyStyle::name_and_type, -1) +
         "\nBut we don't know which step during the execution modified the value.\n\n**Usage Line:**\n`" +
         in.usage_code + "`\n\n`" + in.root_name + "` has a field `" + field + "`, does the code `" +
         in.target_code + "` directly or indirectly write field `" + field +
         "`?\nIn your response, strictly return <T> for true and <F> for false. Briefly explain your answer.";
  return out;
}

std::string repair_prompt(const std::string& prompt, const std::string& error) {
  return prompt + "\n\nYour previous response could not be parsed (" + error +
         "). Answer again and follow the required output format exactly.";
}

}  // namespace recov
