#pragma once

#include <map>
#include <string>
#include <string_view>

namespace s2k::prompts {

/// Question-generation prompt; placeholder `{article_text}`.
extern const std::string_view kMetaQuestion;
/// Reasoning prompts; placeholder `{meta_knowledge_from_sampling}`.
extern const std::string_view kInductive;
extern const std::string_view kDeductive;
extern const std::string_view kCaseBased;

/// Single-pass placeholder substitution. `{name}` is replaced by
/// `values.at(name)`, `{{` and `}}` collapse to literal braces, and
/// substituted text is never re-scanned. Throws PreconditionError for an
/// unknown placeholder.
std::string render(std::string_view tmpl, const std::map<std::string, std::string>& values);

}  // namespace s2k::prompts
