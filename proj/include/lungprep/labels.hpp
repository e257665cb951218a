#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace lungprep {

// COVID-19 infection, common pneumonia, normal.
enum class Diagnosis { CI, CP, N };

inline constexpr std::array<Diagnosis, 3> kAllDiagnoses{Diagnosis::CI, Diagnosis::CP, Diagnosis::N};

std::string_view to_string(Diagnosis d);
std::optional<Diagnosis> parse_diagnosis(std::string_view text);

// Comma-separated list such as "CP,CI,N". Throws InputError on unknown or
// duplicate labels.
std::vector<Diagnosis> parse_diagnosis_list(std::string_view text);
std::string join_diagnoses(const std::vector<Diagnosis>& list);

}  // namespace lungprep
