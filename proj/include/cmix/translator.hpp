#pragma once

#include <string>

#include "cmix/common.hpp"

namespace cmix {

// Hook for plugging a translation backend in front of native-pool mixing.
// No backend ships with the toolkit; IdentityTranslator passes text through
// so pipelines stay runnable without one.
class Translator {
 public:
  virtual ~Translator() = default;
  virtual std::string translate(const std::string& text,
                                const std::string& source_lang,
                                const std::string& target_lang) = 0;
  virtual std::string name() const = 0;
};

class IdentityTranslator : public Translator {
 public:
  std::string translate(const std::string& text, const std::string&,
                        const std::string&) override {
    return text;
  }
  std::string name() const override { return "identity"; }
};

}  // namespace cmix
