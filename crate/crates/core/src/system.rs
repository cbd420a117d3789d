//! Systems of inequalities `g_j(x) <= 0` and their single-occurrence form.
//!
//! Rewriting gives every occurrence of a variable its own fresh name; the
//! fresh names of one source variable form an equivalence class that the
//! compiled problem ties together with an all-equal constraint. Classes are
//! built per source variable across the whole system, so one class can
//! link occurrences from several inequalities.
//!
//! Naming: a system over `n` source variables rewrites into one over
//! `m >= n` variables.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::expr::{BoundExpr, Expr};
use crate::interval::{Interval, IntervalBox};
use crate::scalar::Scalar;

/// Fresh variables standing for one source variable.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct EquivalenceClass {
    pub origin: String,
    pub members: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SystemSpec<T> {
    /// Declared variables with their initial domains, in declaration order.
    pub variables: Vec<(String, Interval<T>)>,
    /// Each expression `g` stands for `g <= 0`.
    pub inequalities: Vec<Expr>,
    pub classes: Vec<EquivalenceClass>,
}

impl<T: Scalar> SystemSpec<T> {
    /// Checks that names are distinct and every expression variable is
    /// declared.
    pub fn new(variables: Vec<(String, Interval<T>)>, inequalities: Vec<Expr>) -> Result<Self> {
        let spec = SystemSpec {
            variables,
            inequalities,
            classes: Vec::new(),
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        let mut names = BTreeSet::new();
        for (n, _) in &self.variables {
            if !names.insert(n.as_str()) {
                return Err(Error::DuplicateVariable(n.clone()));
            }
        }
        for g in &self.inequalities {
            for v in g.variables() {
                if !names.contains(v.as_str()) {
                    return Err(Error::UnboundVariable(v));
                }
            }
        }
        let mut in_class = BTreeSet::new();
        for c in &self.classes {
            for m in &c.members {
                if !names.contains(m.as_str()) {
                    return Err(Error::UnboundVariable(m.clone()));
                }
                if !in_class.insert(m.as_str()) {
                    return Err(Error::OverlappingClasses(m.clone()));
                }
            }
        }
        Ok(())
    }

    pub fn names(&self) -> Vec<String> {
        self.variables.iter().map(|(n, _)| n.clone()).collect()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.variables.iter().position(|(n, _)| n == name)
    }

    pub fn initial_box(&self) -> IntervalBox<T> {
        self.variables.iter().map(|(_, d)| *d).collect()
    }

    /// Occurrences of each variable summed over all inequalities.
    pub fn occurrence_counts(&self) -> BTreeMap<String, usize> {
        let mut counts = BTreeMap::new();
        for g in &self.inequalities {
            for (v, k) in g.occurrences() {
                *counts.entry(v).or_insert(0) += k;
            }
        }
        counts
    }

    pub fn is_single_occurrence(&self) -> bool {
        self.occurrence_counts().values().all(|&k| k <= 1)
    }

    /// Single-occurrence form: each occurrence of a repeated variable gets
    /// a fresh name (left to right, inequality by inequality), all fresh
    /// names inherit the source domain, and one class per repeated variable
    /// records them. Variables occurring at most once are left alone.
    pub fn rewrite_single_occurrence(&self) -> SystemSpec<T> {
        let counts = self.occurrence_counts();
        let mut taken: BTreeSet<String> = self.names().into_iter().collect();
        let mut fresh: BTreeMap<String, Vec<String>> = BTreeMap::new();
        for (name, _) in &self.variables {
            let k = counts.get(name).copied().unwrap_or(0);
            if k < 2 {
                continue;
            }
            // one separator for the whole class, lengthened until no
            // member collides
            let mut sep = "_".to_string();
            let members: Vec<String> = loop {
                let candidates: Vec<String> = (1..=k).map(|i| format!("{name}{sep}{i}")).collect();
                if candidates.iter().all(|c| !taken.contains(c)) {
                    break candidates;
                }
                sep.push('_');
            };
            taken.extend(members.iter().cloned());
            fresh.insert(name.clone(), members);
        }

        let mut cursor: BTreeMap<String, usize> = BTreeMap::new();
        let inequalities = self
            .inequalities
            .iter()
            .map(|g| {
                g.map_vars(&mut |v| match fresh.get(v) {
                    Some(members) => {
                        let i = cursor.entry(v.to_string()).or_insert(0);
                        *i += 1;
                        members[*i - 1].clone()
                    }
                    None => v.to_string(),
                })
            })
            .collect();

        let mut variables = Vec::new();
        for (name, dom) in &self.variables {
            match fresh.get(name) {
                Some(members) => variables.extend(members.iter().map(|m| (m.clone(), *dom))),
                None => variables.push((name.clone(), *dom)),
            }
        }

        // existing classes absorb the fresh names of their split members
        let mut classes: Vec<EquivalenceClass> = self
            .classes
            .iter()
            .map(|c| EquivalenceClass {
                origin: c.origin.clone(),
                members: c
                    .members
                    .iter()
                    .flat_map(|m| fresh.get(m).cloned().unwrap_or_else(|| vec![m.clone()]))
                    .collect(),
            })
            .collect();
        let absorbed: BTreeSet<&String> = self.classes.iter().flat_map(|c| &c.members).collect();
        for (name, _) in &self.variables {
            if let Some(members) = fresh.get(name) {
                if !absorbed.contains(name) {
                    classes.push(EquivalenceClass {
                        origin: name.clone(),
                        members: members.clone(),
                    });
                }
            }
        }

        SystemSpec {
            variables,
            inequalities,
            classes,
        }
    }

    /// Source variable each variable of this system stands for.
    pub fn origin_of<'a>(&'a self, name: &'a str) -> &'a str {
        self.classes
            .iter()
            .find(|c| c.members.iter().any(|m| m == name))
            .map(|c| c.origin.as_str())
            .unwrap_or(name)
    }

    pub fn bind_all(&self) -> Result<Vec<BoundExpr<T>>> {
        let names = self.names();
        self.inequalities.iter().map(|g| g.bind(&names)).collect()
    }

    /// Whether every inequality is certainly satisfied on `b`
    /// (the interval value of each `g` has right bound `<= 0`).
    pub fn certainly_satisfied(&self, bound: &[BoundExpr<T>], b: &[Interval<T>]) -> bool {
        bound.iter().all(|g| g.eval(b).hi() <= T::zero())
    }
}
