#include <algorithm>
#include <map>
#include <set>
#include <tuple>

#include "exmap/aggregate.hpp"

namespace exmap {

SelectionResult select_institutions(std::span<const InstitutionAggregate> aggregates,
                                    const SelectionCriteria& criteria) {
  SelectionResult out;
  std::vector<InstitutionAggregate> sorted(aggregates.begin(), aggregates.end());
  std::sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) {
    return std::tie(a.subject, a.institution_id) < std::tie(b.subject, b.institution_id);
  });

  // Step 1: paper minimum within each subject.
  std::map<std::string, std::vector<const InstitutionAggregate*>> qualifying;
  for (const auto& a : sorted) {
    if (a.n < criteria.min_papers) {
      out.exclusions.push_back({a.institution_id, a.subject,
                                "fewer than " + std::to_string(criteria.min_papers) + " papers (" +
                                    std::to_string(a.n) + ")"});
      continue;
    }
    qualifying[a.subject].push_back(&a);
  }

  // Step 2: institution minimum per regular subject.
  std::map<std::string, std::size_t> subjects_per_inst;
  std::set<std::string> retained;
  for (const auto& [subject, members] : qualifying) {
    if (subject == kAllSubjects) continue;
    if (members.size() < criteria.min_institutions) {
      out.exclusions.push_back({"", subject,
                                "subject has " + std::to_string(members.size()) +
                                    " qualifying institutions, fewer than " +
                                    std::to_string(criteria.min_institutions)});
      continue;
    }
    retained.insert(subject);
    for (const auto* a : members) ++subjects_per_inst[a->institution_id];
  }

  // Step 3: "All subject areas" needs qualifying presence (paper minimum
  // met) in enough retained subjects.
  std::vector<const InstitutionAggregate*> all_members;
  if (auto it = qualifying.find(kAllSubjects); it != qualifying.end()) {
    for (const auto* a : it->second) {
      const auto count = subjects_per_inst[a->institution_id];
      if (count < criteria.min_subjects_for_all) {
        out.exclusions.push_back({a->institution_id, kAllSubjects,
                                  "qualifying presence (>= " + std::to_string(criteria.min_papers) +
                                      " papers) in " + std::to_string(count) + " subjects, fewer than " +
                                      std::to_string(criteria.min_subjects_for_all)});
        continue;
      }
      all_members.push_back(a);
    }
    if (all_members.size() < criteria.min_institutions) {
      out.exclusions.push_back({"", kAllSubjects,
                                "subject has " + std::to_string(all_members.size()) +
                                    " qualifying institutions, fewer than " +
                                    std::to_string(criteria.min_institutions)});
      all_members.clear();
    }
  }

  for (const auto& subject : retained)
    for (const auto* a : qualifying[subject]) out.kept.push_back(*a);
  for (const auto* a : all_members) out.kept.push_back(*a);
  std::sort(out.kept.begin(), out.kept.end(), [](const auto& a, const auto& b) {
    return std::tie(a.subject, a.institution_id) < std::tie(b.subject, b.institution_id);
  });
  return out;
}

}  // namespace exmap
