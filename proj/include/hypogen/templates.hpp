#pragma once

#include <filesystem>
#include <map>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "hypogen/core.hpp"

namespace hypogen {

// Placeholders are written {{name}} with name in [A-Za-z0-9_].
struct Template {
    std::string id;
    std::string system_text;
    std::string user_text;
    std::set<std::string> required_placeholders;
};

struct RenderContext {
    std::map<std::string, std::string> bindings;

    RenderContext& set(const std::string& name, std::string value) {
        bindings[name] = std::move(value);
        return *this;
    }
    RenderContext& set(const std::string& name, std::size_t value) {
        bindings[name] = std::to_string(value);
        return *this;
    }
};

struct RenderedPrompt {
    std::string system;
    std::string user;

    friend bool operator==(const RenderedPrompt&, const RenderedPrompt&) = default;
};

std::set<std::string> find_placeholders(std::string_view text);

// Throws ConfigError naming the first placeholder without a binding.
std::string substitute(std::string_view text, const RenderContext& context);

class TemplateRegistry {
public:
    // Loads one YAML file, or every *.yaml / *.yml file in a directory:
    //   templates:
    //     - id: ...
    //       placeholders: [a, b]
    //       system: |
    //         ...
    //       user: |
    //         ...
    static TemplateRegistry load(const std::filesystem::path& path);

    // Throws ConfigError when the declared placeholders differ from the
    // ones used in the texts, or when the id is taken.
    void add(Template tmpl);

    bool contains(const std::string& id) const { return templates_.count(id) != 0; }
    const Template& get(const std::string& id) const;
    std::size_t size() const { return templates_.size(); }

    RenderedPrompt render(const std::string& id, const RenderContext& context) const;

private:
    std::map<std::string, Template> templates_;
};

// "1. first\n2. second" -- input order, 1-based.
std::string format_hypothesis_list(const std::vector<std::string>& texts);

// Renders each example through the task's example template and joins the
// blocks with blank lines. `index` is bound 1-based.
std::string format_examples(const TemplateRegistry& registry, const TaskSpec& task,
                            std::span<const LabeledExample> examples);

// Binds every schema field of the instance as a placeholder.
void bind_instance(RenderContext& context, const TaskSpec& task, const LabeledExample& example);

// ---------------------------------------------------------------------------
// Output parsing

struct ParsedHypotheses {
    std::vector<std::string> items;
    std::size_t expected = 0;

    bool shortfall() const { return items.size() < expected; }
};

// Extracts numbered items "N. text" with N running 1, 2, 3, ... Text before
// item 1 is discarded; continuation lines are joined with a space; at most
// `expected_count` items are returned. Throws ParseError when nothing is
// numbered.
ParsedHypotheses parse_hypothesis_list(std::string_view text, std::size_t expected_count);

// Reads the label after the last "Final answer:" marker (case-insensitive,
// braces and quotes tolerated). Ordinal phrasing such as "the second
// argument" maps to the label at that position. The result is always an
// element of `label_set`. Throws ParseError otherwise.
std::string parse_final_answer(std::string_view text, const std::vector<std::string>& label_set);

}  // namespace hypogen
