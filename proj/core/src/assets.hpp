#pragma once

// Text assets compiled from core/assets/ (see core/CMakeLists.txt).

#include <string_view>

namespace qcomp::assets {

extern const std::string_view kQuestionTechnicalPrompt;
extern const std::string_view kQuestionConceptualPrompt;
extern const std::string_view kQueryPrompt;
extern const std::string_view kCardPrompt;
extern const std::string_view kMultihopPrompt;
extern const std::string_view kAdpLexicon;
extern const std::string_view kCconjLexicon;

}  // namespace qcomp::assets
