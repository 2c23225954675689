#include "basinfo/permissions.hpp"

#include <algorithm>

#include "basinfo/error.hpp"

namespace basinfo {

std::string_view to_string(Action a) {
  switch (a) {
    case Action::ViewMetadata: return "view-metadata";
    case Action::ViewData: return "view-data";
    case Action::Download: return "download";
    case Action::Edit: return "edit";
    case Action::Manage: return "manage";
  }
  return "";
}

Action parse_action(std::string_view name) {
  for (auto a : kAllActions) {
    if (to_string(a) == name) return a;
  }
  throw Error(ErrorCode::InvalidArgument, "unknown action '" + std::string(name) + "'", std::string(name));
}

std::vector<std::string> ActionSet::names() const {
  std::vector<std::string> out;
  for (auto a : kAllActions) {
    if (contains(a)) out.emplace_back(to_string(a));
  }
  return out;
}

bool check_permission(const Principal& who, const ObjectRef& object, Action action,
                      std::span<const PermissionGrant> grants) {
  if (who.is_admin) return true;
  if (!who.user_id.empty() && object.owner && *object.owner == who.user_id) return true;
  auto subject_matches = [&](const PermissionGrant& g) {
    if (g.subject_kind == SubjectKind::User) return !who.user_id.empty() && g.subject_id == who.user_id;
    return g.subject_id == kPublicGroup ||
           std::find(who.groups.begin(), who.groups.end(), g.subject_id) != who.groups.end();
  };
  auto object_matches = [&](const PermissionGrant& g) {
    return g.object_id == object.id || (object.study_area && g.object_id == *object.study_area);
  };
  return std::any_of(grants.begin(), grants.end(), [&](const PermissionGrant& g) {
    return g.actions.contains(action) && subject_matches(g) && object_matches(g);
  });
}

}  // namespace basinfo
