#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace basinfo {

enum class Action : std::uint8_t {
  ViewMetadata = 1 << 0,
  ViewData = 1 << 1,
  Download = 1 << 2,
  Edit = 1 << 3,
  Manage = 1 << 4,
};
std::string_view to_string(Action a);
Action parse_action(std::string_view name);
inline constexpr Action kAllActions[] = {Action::ViewMetadata, Action::ViewData, Action::Download,
                                         Action::Edit, Action::Manage};

class ActionSet {
 public:
  constexpr ActionSet() = default;
  constexpr ActionSet(std::initializer_list<Action> actions) {
    for (auto a : actions) bits_ |= static_cast<std::uint8_t>(a);
  }
  static constexpr ActionSet from_bits(std::uint8_t bits) {
    ActionSet s;
    s.bits_ = bits & 0x1F;
    return s;
  }
  constexpr bool contains(Action a) const { return bits_ & static_cast<std::uint8_t>(a); }
  constexpr bool empty() const { return bits_ == 0; }
  constexpr std::uint8_t bits() const { return bits_; }
  void insert(Action a) { bits_ |= static_cast<std::uint8_t>(a); }
  std::vector<std::string> names() const;
  bool operator==(const ActionSet&) const = default;

 private:
  std::uint8_t bits_ = 0;
};

enum class SubjectKind { User, Group };

/// Additive grant; there are no negative grants.
struct PermissionGrant {
  std::string id;
  SubjectKind subject_kind = SubjectKind::User;
  std::string subject_id;
  std::string object_id;  // dataset id or study-area id
  ActionSet actions;
};

/// Every principal, including anonymous requests, is a member of this group.
inline constexpr std::string_view kPublicGroup = "public";

struct Principal {
  std::string user_id;  // empty for anonymous
  std::vector<std::string> groups;
  bool is_admin = false;

  static Principal anonymous() { return {}; }
};

struct ObjectRef {
  std::string id;
  std::optional<std::string> owner;
  std::optional<std::string> study_area;
};

/// Default deny: allow iff admin, owner, or a direct/group grant on the object
/// or its study area includes `action`.
bool check_permission(const Principal& who, const ObjectRef& object, Action action,
                      std::span<const PermissionGrant> grants);

}  // namespace basinfo
