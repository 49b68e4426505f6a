use super::Platform;
use crate::access::{check_role, Action, Decision, Grant, Principal, Role};
use crate::dataset::ActivityAction;
use crate::error::{Error, Result};
use crate::id::Id;

fn describe(principal: &Principal) -> String {
    match principal {
        Principal::User(id) => format!("user {id}"),
        Principal::Team(id) => format!("team {id}"),
        Principal::Workspace(id) => format!("workspace {id}"),
    }
}

impl Platform {
    /// Upsert a non-owner grant. The principal must belong to the dataset's workspace.
    pub fn grant(&self, dataset: Id, caller: Id, principal: Principal, role: Role) -> Result<Grant> {
        if role == Role::Owner {
            return Err(Error::OwnerViaGrant);
        }
        self.write(|txn| {
            let record = txn.state.authorized(dataset, caller, Action::ManageGrants)?;
            let ws = txn.state.workspace(record.dataset.workspace_id)?;
            match principal {
                Principal::User(user) if !txn.state.users.contains_key(&user) => {
                    return Err(Error::NotFound(format!("user {user}")))
                }
                Principal::Team(team) if !ws.teams.contains(&team) => {
                    return Err(Error::NotFound(format!("team {team} in workspace")))
                }
                Principal::Workspace(w) if w != ws.id => {
                    return Err(Error::InvalidArgument("grant to a foreign workspace".into()))
                }
                _ => {}
            }
            txn.state.record_mut(dataset)?.dataset.grants.upsert(principal, role)?;
            txn.log(
                dataset,
                caller,
                ActivityAction::GrantChanged,
                format!("granted {} to {}", role.as_str(), describe(&principal)),
            )?;
            Ok(Grant {
                dataset_id: dataset,
                principal,
                role,
            })
        })
    }

    /// Remove a non-owner grant. Returns the role it carried.
    pub fn revoke(&self, dataset: Id, caller: Id, principal: Principal) -> Result<Role> {
        self.write(|txn| {
            txn.state.authorized(dataset, caller, Action::ManageGrants)?;
            let removed = txn
                .state
                .record_mut(dataset)?
                .dataset
                .grants
                .revoke(&principal)?
                .ok_or_else(|| Error::NotFound(format!("grant for {}", describe(&principal))))?;
            txn.log(
                dataset,
                caller,
                ActivityAction::GrantChanged,
                format!("revoked {} from {}", removed.as_str(), describe(&principal)),
            )?;
            Ok(removed)
        })
    }

    pub fn grants(&self, dataset: Id, caller: Id) -> Result<Vec<Grant>> {
        let state = self.read();
        let record = state.authorized(dataset, caller, Action::ViewFiles)?;
        Ok(record
            .dataset
            .grants
            .iter()
            .map(|(p, r)| Grant {
                dataset_id: dataset,
                principal: *p,
                role: *r,
            })
            .collect())
    }

    pub fn effective_role(&self, user: Id, dataset: Id) -> Result<Option<Role>> {
        let state = self.read();
        let record = state.record(dataset)?;
        Ok(state.role_of(user, &record.dataset))
    }

    pub fn check(&self, user: Id, dataset: Id, action: Action) -> Result<Decision> {
        Ok(check_role(self.effective_role(user, dataset)?, action))
    }

    pub fn transfer_ownership(&self, dataset: Id, caller: Id, new_owner: Id) -> Result<Vec<Grant>> {
        self.write(|txn| {
            let record = txn.state.authorized(dataset, caller, Action::TransferOwnership)?;
            let ws = txn.state.workspace(record.dataset.workspace_id)?;
            if !ws.members.contains(&new_owner) {
                return Err(Error::NotAMember(new_owner.to_string()));
            }
            let previous = record.dataset.owner_id;
            let d = &mut txn.state.record_mut(dataset)?.dataset;
            d.grants.transfer_owner(new_owner);
            d.owner_id = new_owner;
            txn.log(
                dataset,
                caller,
                ActivityAction::GrantChanged,
                format!("ownership transferred from {previous} to {new_owner}"),
            )?;
            let grants = txn.state.record(dataset)?.dataset.grants.iter().map(|(p, r)| Grant {
                dataset_id: dataset,
                principal: *p,
                role: *r,
            });
            Ok(grants.collect())
        })
    }
}
