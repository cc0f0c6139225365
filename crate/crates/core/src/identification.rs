//! Graph-level identification checks for the four effect families.
//!
//! Each rung is a sufficient condition decided by d-separation on the
//! declared DAG, with latent variables treated as unobserved:
//!
//! | rung | family   | adds                                              |
//! |------|----------|---------------------------------------------------|
//! | 1    | TE       | no open backdoor A..Y given observed C            |
//! | 2    | CDE/GIDE | no open backdoor M..Y given observed C, A, L      |
//! | 3    | IDE/IIE  | no open backdoor A..M given observed C            |
//! | 4    | NDE/NIE  | no intermediate confounder of M and Y             |
//!
//! A failed rung propagates to every rung above it. "Not identified" means
//! not identified by these criteria; no completeness claim is made.

use std::collections::VecDeque;
use std::fmt;

use crate::effects::{
    controlled_direct_effect, generalized_ide, interventional_effects, natural_effects, total_effect, Decomposition,
    EffectsError,
};
use crate::engine::{Engine, EngineError, Limits, MediatorDistributionSpec};
use crate::estimation::{
    cde_estimator, gide_estimator, mediation_formula_interventional, mediation_formula_natural, plug_in_te,
    EstimationError, Source,
};
use crate::law::observational_distribution;
use crate::model::{Role, Scm};
use crate::scalar::Scalar;

/// Directed graph view of a model with roles and observability.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DagView {
    pub names: Vec<String>,
    pub roles: Vec<Role>,
    pub observed: Vec<bool>,
    pub parents: Vec<Vec<usize>>,
    pub children: Vec<Vec<usize>>,
}

impl DagView {
    pub fn of<S: Scalar>(scm: &Scm<S>) -> Self {
        let vars = scm.variables();
        let parents: Vec<Vec<usize>> = vars.iter().map(|v| v.parents.clone()).collect();
        Self::from_parents(
            vars.iter().map(|v| v.name.clone()).collect(),
            vars.iter().map(|v| v.role).collect(),
            parents,
        )
    }

    pub fn from_parents(names: Vec<String>, roles: Vec<Role>, parents: Vec<Vec<usize>>) -> Self {
        let mut children = vec![Vec::new(); names.len()];
        for (c, ps) in parents.iter().enumerate() {
            for &p in ps {
                children[p].push(c);
            }
        }
        let observed = roles.iter().map(|r| r.is_observed()).collect();
        Self {
            names,
            roles,
            observed,
            parents,
            children,
        }
    }

    /// Builds a view from `parent -> child` edges; all nodes observed unless
    /// their role is latent.
    pub fn from_edges(nodes: &[(&str, Role)], edges: &[(&str, &str)]) -> Self {
        let names: Vec<String> = nodes.iter().map(|(n, _)| n.to_string()).collect();
        let idx = |n: &str| names.iter().position(|x| x == n).expect("edge endpoint declared");
        let mut parents = vec![Vec::new(); names.len()];
        for (p, c) in edges {
            parents[idx(c)].push(idx(p));
        }
        Self::from_parents(names.clone(), nodes.iter().map(|(_, r)| *r).collect(), parents)
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn index(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    fn role_nodes(&self, role: Role) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.roles[i] == role).collect()
    }

    fn single(&self, role: Role) -> Option<usize> {
        self.role_nodes(role).first().copied()
    }

    /// Copy with every edge leaving `node` removed.
    pub fn without_outgoing(&self, node: usize) -> Self {
        let parents = self
            .parents
            .iter()
            .map(|ps| ps.iter().copied().filter(|&p| p != node).collect())
            .collect();
        let mut out = Self::from_parents(self.names.clone(), self.roles.clone(), parents);
        out.observed = self.observed.clone();
        out
    }

    /// Copy with `node` and its edges removed from adjacency (kept as an
    /// isolated vertex so indices stay valid).
    pub fn isolating(&self, node: usize) -> Self {
        let parents = self
            .parents
            .iter()
            .enumerate()
            .map(|(c, ps)| {
                if c == node {
                    Vec::new()
                } else {
                    ps.iter().copied().filter(|&p| p != node).collect()
                }
            })
            .collect();
        let mut out = Self::from_parents(self.names.clone(), self.roles.clone(), parents);
        out.observed = self.observed.clone();
        out
    }

    fn closure(&self, start: &[usize], up: bool) -> Vec<bool> {
        let mut mask = vec![false; self.len()];
        let mut stack: Vec<usize> = start.to_vec();
        while let Some(x) = stack.pop() {
            let next = if up { &self.parents[x] } else { &self.children[x] };
            for &y in next {
                if !mask[y] {
                    mask[y] = true;
                    stack.push(y);
                }
            }
        }
        mask
    }

    /// Strict ancestors of any node in `nodes`.
    pub fn ancestors(&self, nodes: &[usize]) -> Vec<bool> {
        self.closure(nodes, true)
    }

    /// Strict descendants of any node in `nodes`.
    pub fn descendants(&self, nodes: &[usize]) -> Vec<bool> {
        self.closure(nodes, false)
    }
}

/// Reachability ("Bayes ball") d-separation test.
pub fn d_separated(dag: &DagView, x: &[usize], y: &[usize], z: &[usize]) -> bool {
    let n = dag.len();
    let mut in_z = vec![false; n];
    for &v in z {
        in_z[v] = true;
    }
    // Nodes that are in Z or have a descendant in Z.
    let mut z_or_anc = dag.ancestors(z);
    for &v in z {
        z_or_anc[v] = true;
    }
    let mut in_y = vec![false; n];
    for &v in y {
        in_y[v] = true;
    }

    // visited[node][0] = arrived from a child (moving up), [1] = from a parent.
    let mut visited = vec![[false; 2]; n];
    let mut queue: VecDeque<(usize, usize)> = x.iter().map(|&v| (v, 0)).collect();
    while let Some((v, dir)) = queue.pop_front() {
        if visited[v][dir] {
            continue;
        }
        visited[v][dir] = true;
        if !in_z[v] && in_y[v] {
            return false;
        }
        if dir == 0 {
            if !in_z[v] {
                queue.extend(dag.parents[v].iter().map(|&p| (p, 0)));
                queue.extend(dag.children[v].iter().map(|&c| (c, 1)));
            }
        } else {
            if !in_z[v] {
                queue.extend(dag.children[v].iter().map(|&c| (c, 1)));
            }
            if z_or_anc[v] {
                queue.extend(dag.parents[v].iter().map(|&p| (p, 0)));
            }
        }
    }
    true
}

/// A path as a node sequence; `forward[i]` is true when the edge between
/// `nodes[i]` and `nodes[i + 1]` points from `i` to `i + 1`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Path {
    pub nodes: Vec<usize>,
    pub forward: Vec<bool>,
}

impl Path {
    pub fn render(&self, dag: &DagView) -> String {
        let mut out = dag.names[self.nodes[0]].clone();
        for (i, &fwd) in self.forward.iter().enumerate() {
            out.push_str(if fwd { " -> " } else { " <- " });
            out.push_str(&dag.names[self.nodes[i + 1]]);
        }
        out
    }

    /// Whether the path is open given `z` (with `z_or_anc` marking nodes in
    /// `z` or with a descendant in `z`).
    fn is_open(&self, in_z: &[bool], z_or_anc: &[bool]) -> bool {
        (1..self.nodes.len() - 1).all(|i| {
            let v = self.nodes[i];
            let collider = self.forward[i - 1] && !self.forward[i];
            if collider {
                z_or_anc[v]
            } else {
                !in_z[v]
            }
        })
    }
}

const PATH_SEARCH_LIMIT: usize = 200_000;

/// Shortest open path from `from` to any node in `to` given `z`, found by
/// enumerating simple paths in order of length.
pub fn open_path(dag: &DagView, from: usize, to: &[usize], z: &[usize]) -> Option<Path> {
    let n = dag.len();
    let mut in_z = vec![false; n];
    for &v in z {
        in_z[v] = true;
    }
    let mut z_or_anc = dag.ancestors(z);
    for &v in z {
        z_or_anc[v] = true;
    }
    let mut best: Option<Path> = None;
    let mut explored = 0usize;
    let mut stack = vec![Path {
        nodes: vec![from],
        forward: Vec::new(),
    }];
    while let Some(path) = stack.pop() {
        explored += 1;
        if explored > PATH_SEARCH_LIMIT {
            break;
        }
        if best.as_ref().is_some_and(|b| b.nodes.len() <= path.nodes.len()) {
            continue;
        }
        let last = *path.nodes.last().expect("non-empty");
        if path.nodes.len() > 1 && to.contains(&last) {
            if path.is_open(&in_z, &z_or_anc) {
                best = Some(path);
            }
            continue;
        }
        // Prune prefixes already blocked at an interior node.
        if path.nodes.len() > 2 {
            let prefix = Path {
                nodes: path.nodes.clone(),
                forward: path.forward.clone(),
            };
            let k = prefix.nodes.len() - 2;
            let v = prefix.nodes[k];
            let collider = prefix.forward[k - 1] && !prefix.forward[k];
            let blocked = if collider { !z_or_anc[v] } else { in_z[v] };
            if blocked {
                continue;
            }
        }
        let mut steps: Vec<(usize, bool)> = dag.children[last].iter().map(|&c| (c, true)).collect();
        steps.extend(dag.parents[last].iter().map(|&p| (p, false)));
        steps.sort_unstable_by(|a, b| b.cmp(a));
        for (next, fwd) in steps {
            if path.nodes.contains(&next) {
                continue;
            }
            let mut p = path.clone();
            p.nodes.push(next);
            p.forward.push(fwd);
            stack.push(p);
        }
    }
    best
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Family {
    Te,
    CdeGide,
    IdeIie,
    NdeNie,
}

impl Family {
    pub const ALL: [Family; 4] = [Family::Te, Family::CdeGide, Family::IdeIie, Family::NdeNie];

    pub fn name(self) -> &'static str {
        match self {
            Family::Te => "TE",
            Family::CdeGide => "CDE/GIDE",
            Family::IdeIie => "IDE/IIE",
            Family::NdeNie => "NDE/NIE",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Assumption {
    NoUnobservedAyConfounding,
    NoUnobservedMyConfounding,
    NoUnobservedAmConfounding,
    NoIntermediateConfounders,
}

impl fmt::Display for Assumption {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Assumption::NoUnobservedAyConfounding => "no unobserved A-Y confounding given C",
            Assumption::NoUnobservedMyConfounding => "no unobserved M-Y confounding given C, A, L",
            Assumption::NoUnobservedAmConfounding => "no unobserved A-M confounding given C",
            Assumption::NoIntermediateConfounders => "no intermediate confounders",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Failure {
    pub assumption: Assumption,
    pub witness: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Identified,
    NotIdentified,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RungReport {
    pub family: Family,
    pub status: Status,
    /// Every failed assumption at or below this rung, lowest rung first.
    pub failures: Vec<Failure>,
}

impl RungReport {
    pub fn is_identified(&self) -> bool {
        self.status == Status::Identified
    }

    pub fn failed_assumption(&self) -> Option<Assumption> {
        self.failures.first().map(|f| f.assumption)
    }

    pub fn witness(&self) -> Option<&str> {
        self.failures.first().map(|f| f.witness.as_str())
    }
}

impl fmt::Display for RungReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.failures.first() {
            None => write!(f, "RUNG {}: IDENTIFIED", self.family),
            Some(fail) => write!(
                f,
                "RUNG {}: NOT IDENTIFIED ({}; witness: {})",
                self.family, fail.assumption, fail.witness
            ),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LadderReport {
    pub rungs: Vec<RungReport>,
    pub warnings: Vec<String>,
}

impl LadderReport {
    pub fn rung(&self, family: Family) -> &RungReport {
        self.rungs
            .iter()
            .find(|r| r.family == family)
            .expect("every family reported")
    }

    pub fn identified(&self, family: Family) -> bool {
        self.rung(family).is_identified()
    }
}

/// Nodes that descend from the exposure, are ancestors of the mediator, and
/// reach the outcome without passing through the mediator.
pub fn intermediate_confounders(dag: &DagView) -> Vec<usize> {
    let (Some(a), Some(m), Some(y)) = (
        dag.single(Role::Exposure),
        dag.single(Role::Mediator),
        dag.single(Role::Outcome),
    ) else {
        return Vec::new();
    };
    let desc_a = dag.descendants(&[a]);
    let anc_m = dag.ancestors(&[m]);
    let anc_y_avoiding_m = dag.isolating(m).ancestors(&[y]);
    (0..dag.len())
        .filter(|&v| v != m && desc_a[v] && anc_m[v] && anc_y_avoiding_m[v])
        .collect()
}

fn observed_with_roles(dag: &DagView, roles: &[Role]) -> Vec<usize> {
    (0..dag.len())
        .filter(|&v| dag.observed[v] && roles.contains(&dag.roles[v]))
        .collect()
}

/// Runs the four rungs on a DAG view.
pub fn classify(dag: &DagView) -> LadderReport {
    let mut warnings = Vec::new();
    let (Some(a), Some(m), Some(y)) = (
        dag.single(Role::Exposure),
        dag.single(Role::Mediator),
        dag.single(Role::Outcome),
    ) else {
        let failure = Failure {
            assumption: Assumption::NoUnobservedAyConfounding,
            witness: "model lacks an exposure, mediator or outcome".into(),
        };
        return LadderReport {
            rungs: Family::ALL
                .iter()
                .map(|&family| RungReport {
                    family,
                    status: Status::NotIdentified,
                    failures: vec![failure.clone()],
                })
                .collect(),
            warnings,
        };
    };
    let c_obs = observed_with_roles(dag, &[Role::Covariate]);
    let l_obs = observed_with_roles(dag, &[Role::IntermediateConfounder]);

    let path_failure = |g: &DagView, from: usize, to: usize, z: &[usize], assumption: Assumption| {
        if d_separated(g, &[from], &[to], z) {
            None
        } else {
            let witness = open_path(g, from, &[to], z)
                .map(|p| p.render(g))
                .unwrap_or_else(|| format!("{} ~ {}", g.names[from], g.names[to]));
            Some(Failure { assumption, witness })
        }
    };

    // Rung 1.
    let no_a_out = dag.without_outgoing(a);
    let rung1: Vec<Failure> = path_failure(&no_a_out, a, y, &c_obs, Assumption::NoUnobservedAyConfounding)
        .into_iter()
        .collect();

    // Rung 2.
    let mut rung2 = Vec::new();
    let desc_m = dag.descendants(&[m]);
    for &l in &l_obs {
        if desc_m[l] {
            rung2.push(Failure {
                assumption: Assumption::NoUnobservedMyConfounding,
                witness: format!("{} (intermediate confounder descends from {})", dag.names[l], dag.names[m]),
            });
        }
    }
    if rung2.is_empty() {
        let mut z = c_obs.clone();
        z.push(a);
        z.extend(&l_obs);
        rung2.extend(path_failure(
            &dag.without_outgoing(m),
            m,
            y,
            &z,
            Assumption::NoUnobservedMyConfounding,
        ));
    }

    // Rung 3.
    let rung3: Vec<Failure> = path_failure(&no_a_out, a, m, &c_obs, Assumption::NoUnobservedAmConfounding)
        .into_iter()
        .collect();

    // Rung 4.
    let mut rung4 = Vec::new();
    let ls = intermediate_confounders(dag);
    for &l in &ls {
        rung4.push(Failure {
            assumption: Assumption::NoIntermediateConfounders,
            witness: dag.names[l].clone(),
        });
        if dag.roles[l] != Role::IntermediateConfounder {
            warnings.push(format!(
                "`{}` is declared {} but acts as an intermediate confounder",
                dag.names[l], dag.roles[l]
            ));
        }
    }
    if rung4.is_empty() {
        let mut z = c_obs.clone();
        z.push(a);
        rung4.extend(path_failure(
            &dag.without_outgoing(m),
            m,
            y,
            &z,
            Assumption::NoIntermediateConfounders,
        ));
    }
    for &l in &l_obs {
        if !ls.contains(&l) {
            warnings.push(format!(
                "`{}` is declared intermediate_confounder but does not confound M-Y (no path to {} avoiding {})",
                dag.names[l], dag.names[y], dag.names[m]
            ));
        }
    }

    let mut cumulative = Vec::new();
    let rungs = Family::ALL
        .iter()
        .zip([rung1, rung2, rung3, rung4])
        .map(|(&family, own)| {
            cumulative.extend(own);
            RungReport {
                family,
                status: if cumulative.is_empty() {
                    Status::Identified
                } else {
                    Status::NotIdentified
                },
                failures: cumulative.clone(),
            }
        })
        .collect();
    LadderReport { rungs, warnings }
}

/// Outcome of comparing one plug-in against enumeration truth.
#[derive(Debug, Clone, PartialEq)]
pub enum CheckStatus<S> {
    Match,
    Mismatch { plug_in: S },
    /// Plug-in or truth undefined (positivity), with the reason.
    Skipped(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SoundnessCheck<S> {
    pub family: Family,
    pub effect: String,
    pub truth: Option<S>,
    pub status: CheckStatus<S>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SoundnessReport<S> {
    pub ladder: LadderReport,
    pub checks: Vec<SoundnessCheck<S>>,
}

impl<S: Scalar> SoundnessReport<S> {
    pub fn mismatches(&self) -> impl Iterator<Item = &SoundnessCheck<S>> {
        self.checks.iter().filter(|c| matches!(c.status, CheckStatus::Mismatch { .. }))
    }

    pub fn matched(&self) -> usize {
        self.checks.iter().filter(|c| c.status == CheckStatus::Match).count()
    }
}

/// Absolute tolerance for plug-in versus truth (scaled by `max(1, |truth|)`).
pub const SOUNDNESS_TOLERANCE: f64 = 1e-6;

/// For every rung the checker approves, compares the plug-in estimator on the
/// exact observational law with the engine's truth.
pub fn soundness_check<S: Scalar>(scm: &Scm<S>, limits: Limits) -> Result<SoundnessReport<S>, EngineError> {
    let ladder = classify(&DagView::of(scm));
    let engine = Engine::new(scm, limits)?;
    let law = observational_distribution(scm, limits)?;
    let source = Source::Law(&law);
    let mut checks = Vec::new();
    let tol = S::from_f64_lossy(SOUNDNESS_TOLERANCE);

    let mut compare = |family: Family, effect: String, truth: Result<S, String>, plug: Result<S, String>| {
        let (truth, status) = match (truth, plug) {
            (Err(why), _) => (None, CheckStatus::Skipped(format!("truth: {why}"))),
            (Ok(t), Err(why)) => (Some(t), CheckStatus::Skipped(format!("plug-in: {why}"))),
            (Ok(t), Ok(p)) => {
                let ok = (t - p).abs() <= tol * S::one().max(t.abs());
                (Some(t), if ok { CheckStatus::Match } else { CheckStatus::Mismatch { plug_in: p } })
            }
        };
        checks.push(SoundnessCheck {
            family,
            effect,
            truth,
            status,
        });
    };
    let estr = |e: EstimationError| e.to_string();
    let fstr = |e: EffectsError| e.to_string();

    if ladder.identified(Family::Te) {
        compare(
            Family::Te,
            "TE".into(),
            total_effect(&engine).map(|r| r.value).map_err(fstr),
            plug_in_te(source).map(|r| r.estimate).map_err(estr),
        );
    }
    if ladder.identified(Family::CdeGide) {
        for m in &scm.variable(scm.mediator()).support {
            compare(
                Family::CdeGide,
                format!("CDE({m})"),
                controlled_direct_effect(&engine, m).map(|r| r.value).map_err(fstr),
                cde_estimator(source, m).map(|r| r.estimate).map_err(estr),
            );
        }
        for a in 0..2 {
            let spec = MediatorDistributionSpec::observed(a);
            compare(
                Family::CdeGide,
                format!("GIDE({spec})"),
                generalized_ide(&engine, &spec).map(|r| r.value).map_err(fstr),
                gide_estimator(source, &spec).map(|r| r.estimate).map_err(estr),
            );
        }
    }
    if ladder.identified(Family::IdeIie) {
        let truth = interventional_effects(&engine).map_err(fstr);
        let plug = mediation_formula_interventional(source).map_err(estr);
        let truth_values = truth.map(|t| t.reports().map(|r| (r.label.clone(), r.value)));
        for (i, label) in ["IDE(.0)", "IDE(.1)", "IIE(0.)", "IIE(1.)", "OE"].into_iter().enumerate() {
            let t = truth_values.clone().map(|v| {
                v.iter().find(|(l, _)| l == label).map(|(_, x)| *x).expect("labelled report")
            });
            compare(Family::IdeIie, label.into(), t, plug.clone().map(|p| p[i].estimate));
        }
    }
    if ladder.identified(Family::NdeNie) {
        let labels = ["NDE(.0)", "NIE(1.)", "NDE(.1)", "NIE(0.)"];
        let truth = [Decomposition::DirectIndirect, Decomposition::IndirectDirect]
            .into_iter()
            .map(|d| natural_effects(&engine, d).map(|n| [n.direct.value, n.indirect.value]))
            .collect::<Result<Vec<_>, _>>()
            .map(|v| [v[0][0], v[0][1], v[1][0], v[1][1]])
            .map_err(fstr);
        // The checker approved rung 4, so declared-but-inert intermediates
        // do not block the formula.
        let plug = mediation_formula_natural(source, true).map_err(estr);
        for (i, label) in labels.into_iter().enumerate() {
            compare(
                Family::NdeNie,
                label.into(),
                truth.clone().map(|t| t[i]),
                plug.clone().map(|p| p[i].estimate),
            );
        }
    }
    Ok(SoundnessReport { ladder, checks })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fig3() -> DagView {
        DagView::from_edges(
            &[
                ("C", Role::Covariate),
                ("A", Role::Exposure),
                ("M", Role::Mediator),
                ("Y", Role::Outcome),
            ],
            &[("C", "A"), ("C", "M"), ("C", "Y"), ("A", "M"), ("A", "Y"), ("M", "Y")],
        )
    }

    fn fig4() -> DagView {
        DagView::from_edges(
            &[
                ("C", Role::Covariate),
                ("A", Role::Exposure),
                ("L", Role::IntermediateConfounder),
                ("M", Role::Mediator),
                ("Y", Role::Outcome),
            ],
            &[
                ("C", "A"),
                ("C", "L"),
                ("C", "M"),
                ("C", "Y"),
                ("A", "L"),
                ("A", "M"),
                ("A", "Y"),
                ("L", "M"),
                ("L", "Y"),
                ("M", "Y"),
            ],
        )
    }

    #[test]
    fn chain_blocked_by_middle() {
        let g = DagView::from_edges(
            &[("A", Role::Exposure), ("M", Role::Mediator), ("Y", Role::Outcome)],
            &[("A", "M"), ("M", "Y")],
        );
        assert!(d_separated(&g, &[0], &[2], &[1]));
        assert!(!d_separated(&g, &[0], &[2], &[]));
    }

    #[test]
    fn conditioned_collider_opens() {
        let g = DagView::from_edges(
            &[("A", Role::Exposure), ("M", Role::Mediator), ("U", Role::Latent)],
            &[("A", "M"), ("U", "M")],
        );
        assert!(d_separated(&g, &[0], &[2], &[]));
        assert!(!d_separated(&g, &[0], &[2], &[1]));
    }

    #[test]
    fn fig3_backdoor_blocked_by_c() {
        let g = fig3().without_outgoing(1);
        assert!(d_separated(&g, &[1], &[3], &[0]));
        assert!(!d_separated(&g, &[1], &[3], &[]));
    }

    #[test]
    fn fig3_fully_identified() {
        let report = classify(&fig3());
        for f in Family::ALL {
            assert!(report.identified(f), "{f}");
        }
    }

    #[test]
    fn fig4_loses_natural_effects_only() {
        let report = classify(&fig4());
        assert!(report.identified(Family::Te));
        assert!(report.identified(Family::CdeGide));
        assert!(report.identified(Family::IdeIie));
        let top = report.rung(Family::NdeNie);
        assert!(!top.is_identified());
        assert_eq!(top.failed_assumption(), Some(Assumption::NoIntermediateConfounders));
        assert_eq!(top.witness(), Some("L"));
    }

    #[test]
    fn latent_my_confounder_breaks_rungs_two_to_four() {
        let g = DagView::from_edges(
            &[
                ("C", Role::Covariate),
                ("A", Role::Exposure),
                ("M", Role::Mediator),
                ("Y", Role::Outcome),
                ("U", Role::Latent),
            ],
            &[
                ("C", "A"),
                ("C", "M"),
                ("C", "Y"),
                ("A", "M"),
                ("A", "Y"),
                ("M", "Y"),
                ("U", "M"),
                ("U", "Y"),
            ],
        );
        let report = classify(&g);
        assert!(report.identified(Family::Te));
        for f in [Family::CdeGide, Family::IdeIie, Family::NdeNie] {
            let r = report.rung(f);
            assert!(!r.is_identified());
            assert_eq!(r.failed_assumption(), Some(Assumption::NoUnobservedMyConfounding));
            assert_eq!(r.witness(), Some("M <- U -> Y"));
        }
    }

    #[test]
    fn rung_line_format() {
        let report = classify(&fig4());
        assert_eq!(report.rung(Family::Te).to_string(), "RUNG TE: IDENTIFIED");
        assert_eq!(
            report.rung(Family::NdeNie).to_string(),
            "RUNG NDE/NIE: NOT IDENTIFIED (no intermediate confounders; witness: L)"
        );
    }
}
