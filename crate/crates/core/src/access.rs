//! Role-based permissions over datasets.
//!
//! Roles form a total order. A user's effective role on a dataset is the
//! maximum over every path that reaches them: ownership, a direct grant,
//! grants to teams they belong to and a grant to their workspace. There are
//! no deny rules.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::id::Id;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Viewer,
    Editor,
    Manager,
    Owner,
}

impl Role {
    pub const ALL: [Role; 4] = [Role::Viewer, Role::Editor, Role::Manager, Role::Owner];

    pub fn as_str(self) -> &'static str {
        match self {
            Role::Viewer => "viewer",
            Role::Editor => "editor",
            Role::Manager => "manager",
            Role::Owner => "owner",
        }
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Role {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "viewer" => Ok(Role::Viewer),
            "editor" => Ok(Role::Editor),
            "manager" => Ok(Role::Manager),
            "owner" => Ok(Role::Owner),
            other => Err(Error::InvalidArgument(format!("unknown role {other:?}"))),
        }
    }
}

/// Everything a caller can attempt on a dataset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Action {
    ViewFiles,
    Download,
    UploadFiles,
    EditTree,
    EditMetadata,
    EditAttributes,
    ChangeStatus,
    ManageGrants,
    SubmitPublication,
    DeleteDataset,
    TransferOwnership,
}

impl Action {
    pub const ALL: [Action; 11] = [
        Action::ViewFiles,
        Action::Download,
        Action::UploadFiles,
        Action::EditTree,
        Action::EditMetadata,
        Action::EditAttributes,
        Action::ChangeStatus,
        Action::ManageGrants,
        Action::SubmitPublication,
        Action::DeleteDataset,
        Action::TransferOwnership,
    ];

    /// Minimum role that may perform this action.
    pub fn required_role(self) -> Role {
        match self {
            Action::ViewFiles | Action::Download => Role::Viewer,
            Action::UploadFiles | Action::EditTree | Action::EditMetadata => Role::Editor,
            Action::EditAttributes | Action::ChangeStatus | Action::ManageGrants => Role::Manager,
            Action::SubmitPublication | Action::DeleteDataset | Action::TransferOwnership => {
                Role::Owner
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Decision {
    Allow,
    Deny,
}

/// Pure permission check: allow iff `role` reaches the action's requirement.
pub fn check_role(role: Option<Role>, action: Action) -> Decision {
    match role {
        Some(role) if role >= action.required_role() => Decision::Allow,
        _ => Decision::Deny,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(tag = "type", content = "id", rename_all = "lowercase")]
pub enum Principal {
    User(Id),
    Team(Id),
    Workspace(Id),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Grant {
    pub dataset_id: Id,
    pub principal: Principal,
    pub role: Role,
}

/// The grants attached to one dataset, at most one per principal.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GrantSet {
    #[serde(with = "grant_entries")]
    grants: BTreeMap<Principal, Role>,
}

impl GrantSet {
    pub fn with_owner(owner: Id) -> Self {
        let mut grants = BTreeMap::new();
        grants.insert(Principal::User(owner), Role::Owner);
        GrantSet { grants }
    }

    pub fn owner(&self) -> Option<Id> {
        self.grants.iter().find_map(|(p, r)| match (p, r) {
            (Principal::User(id), Role::Owner) => Some(*id),
            _ => None,
        })
    }

    pub fn get(&self, principal: &Principal) -> Option<Role> {
        self.grants.get(principal).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Principal, &Role)> {
        self.grants.iter()
    }

    pub fn owner_count(&self) -> usize {
        self.grants.values().filter(|r| **r == Role::Owner).count()
    }

    /// Insert or replace a non-owner grant.
    pub fn upsert(&mut self, principal: Principal, role: Role) -> Result<()> {
        if role == Role::Owner {
            return Err(Error::OwnerViaGrant);
        }
        if !matches!(principal, Principal::User(_)) && role > Role::Manager {
            return Err(Error::InvalidArgument(
                "team and workspace grants are capped at manager".into(),
            ));
        }
        if self.grants.get(&principal) == Some(&Role::Owner) {
            return Err(Error::OwnerViaGrant);
        }
        self.grants.insert(principal, role);
        Ok(())
    }

    pub fn revoke(&mut self, principal: &Principal) -> Result<Option<Role>> {
        if self.grants.get(principal) == Some(&Role::Owner) {
            return Err(Error::OwnerViaGrant);
        }
        Ok(self.grants.remove(principal))
    }

    /// Move the Owner grant to `new_owner`; the previous owner becomes Manager.
    pub fn transfer_owner(&mut self, new_owner: Id) {
        if let Some(previous) = self.owner() {
            if previous == new_owner {
                return;
            }
            self.grants.insert(Principal::User(previous), Role::Manager);
        }
        self.grants.insert(Principal::User(new_owner), Role::Owner);
    }
}

mod grant_entries {
    use super::*;
    use serde::{Deserializer, Serializer};

    #[derive(Serialize, Deserialize)]
    struct Entry {
        principal: Principal,
        role: Role,
    }

    pub fn serialize<S: Serializer>(
        grants: &BTreeMap<Principal, Role>,
        serializer: S,
    ) -> std::result::Result<S::Ok, S::Error> {
        let entries: Vec<Entry> = grants
            .iter()
            .map(|(p, r)| Entry {
                principal: *p,
                role: *r,
            })
            .collect();
        entries.serialize(serializer)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(
        deserializer: D,
    ) -> std::result::Result<BTreeMap<Principal, Role>, D::Error> {
        let entries = Vec::<Entry>::deserialize(deserializer)?;
        Ok(entries.into_iter().map(|e| (e.principal, e.role)).collect())
    }
}

/// What the resolver needs to know about the caller's memberships.
#[derive(Debug, Clone, Copy)]
pub struct Membership<'a> {
    pub user: Id,
    pub workspace: Id,
    pub in_workspace: bool,
    pub teams: &'a [Id],
}

/// Maximum role reachable by `member` through `grants`, if any.
pub fn effective_role(grants: &GrantSet, member: Membership<'_>) -> Option<Role> {
    let mut best = grants.get(&Principal::User(member.user));
    let mut consider = |role: Option<Role>| {
        if role > best {
            best = role;
        }
    };
    for team in member.teams {
        consider(grants.get(&Principal::Team(*team)));
    }
    if member.in_workspace {
        consider(grants.get(&Principal::Workspace(member.workspace)));
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    fn id(n: u128) -> Id {
        Id::from_u128(n)
    }

    #[test]
    fn roles_are_totally_ordered() {
        assert!(Role::Viewer < Role::Editor);
        assert!(Role::Editor < Role::Manager);
        assert!(Role::Manager < Role::Owner);
        assert!(None < Some(Role::Viewer));
    }

    #[test]
    fn role_wire_names() {
        for role in Role::ALL {
            let json = serde_json::to_string(&role).unwrap();
            assert_eq!(json, format!("\"{}\"", role.as_str()));
            assert_eq!(role.as_str().parse::<Role>().unwrap(), role);
        }
    }

    #[test]
    fn owner_is_allowed_everything() {
        for action in Action::ALL {
            assert_eq!(check_role(Some(Role::Owner), action), Decision::Allow);
        }
    }

    #[test]
    fn viewer_cannot_upload() {
        assert_eq!(check_role(Some(Role::Viewer), Action::UploadFiles), Decision::Deny);
        assert_eq!(check_role(None, Action::ViewFiles), Decision::Deny);
    }

    #[test]
    fn owner_cannot_be_granted() {
        let mut grants = GrantSet::with_owner(id(1));
        assert_eq!(
            grants.upsert(Principal::User(id(2)), Role::Owner),
            Err(Error::OwnerViaGrant)
        );
        assert_eq!(
            grants.upsert(Principal::User(id(1)), Role::Viewer),
            Err(Error::OwnerViaGrant)
        );
    }

    #[test]
    fn team_grants_capped_at_manager() {
        let mut grants = GrantSet::with_owner(id(1));
        assert!(grants.upsert(Principal::Team(id(5)), Role::Manager).is_ok());
        assert_eq!(
            grants.upsert(Principal::Workspace(id(6)), Role::Owner),
            Err(Error::OwnerViaGrant)
        );
    }

    #[test]
    fn direct_viewer_plus_team_editor_is_editor() {
        let mut grants = GrantSet::with_owner(id(1));
        grants.upsert(Principal::User(id(2)), Role::Viewer).unwrap();
        grants.upsert(Principal::Team(id(10)), Role::Editor).unwrap();
        let teams = [id(10)];
        let member = Membership {
            user: id(2),
            workspace: id(100),
            in_workspace: true,
            teams: &teams,
        };
        assert_eq!(effective_role(&grants, member), Some(Role::Editor));
    }

    #[test]
    fn workspace_grant_ignored_for_non_members() {
        let mut grants = GrantSet::with_owner(id(1));
        grants.upsert(Principal::Workspace(id(100)), Role::Viewer).unwrap();
        let outsider = Membership {
            user: id(3),
            workspace: id(100),
            in_workspace: false,
            teams: &[],
        };
        assert_eq!(effective_role(&grants, outsider), None);
    }

    #[test]
    fn transfer_keeps_exactly_one_owner() {
        let mut grants = GrantSet::with_owner(id(1));
        grants.transfer_owner(id(2));
        assert_eq!(grants.owner(), Some(id(2)));
        assert_eq!(grants.get(&Principal::User(id(1))), Some(Role::Manager));
        assert_eq!(grants.owner_count(), 1);
    }

    #[test]
    fn grant_set_serde_round_trip() {
        let mut grants = GrantSet::with_owner(id(1));
        grants.upsert(Principal::Team(id(9)), Role::Editor).unwrap();
        let json = serde_json::to_string(&grants).unwrap();
        let back: GrantSet = serde_json::from_str(&json).unwrap();
        assert_eq!(back, grants);
    }
}
