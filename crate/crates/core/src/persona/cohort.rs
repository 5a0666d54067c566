//! Rule-faithful persona sets: scripts whose symptoms satisfy or miss a
//! disorder's rule by construction.

use std::collections::BTreeMap;

use super::{Choice, ForcedChoicePolicy, PersonaProfile};
use crate::backend::MockTables;
use crate::metrics::Label;
use crate::tree::{bundled_tree, ModuleTag};

/// Builds a persona that affirms one module's nodes and denies everything else.
#[derive(Debug, Clone)]
pub struct PersonaBuilder {
    profile: PersonaProfile,
    module: ModuleTag,
    affirm: BTreeMap<String, String>,
}

impl PersonaBuilder {
    pub fn new(name: &str, module: ModuleTag) -> Self {
        let tree = bundled_tree();
        let tables = MockTables::bundled();
        let affirm = tree
            .nodes()
            .iter()
            .filter(|n| n.module == module && !n.is_terminal())
            .filter_map(|n| {
                tables
                    .persona
                    .get(n.id.as_str())
                    .map(|r| (n.id.as_str().to_string(), r.clone()))
            })
            .collect();
        let label_per_module = ModuleTag::ALL.iter().map(|m| (*m, Label::Control)).collect();
        Self {
            profile: PersonaProfile {
                name: name.to_string(),
                label_per_module,
                ..PersonaProfile::default()
            },
            module,
            affirm,
        }
    }

    /// Scripts every node of the module with its affirmative reply.
    pub fn affirm_all(mut self) -> Self {
        self.profile.answers.extend(self.affirm.clone());
        self
    }

    /// Drops the scripted reply so the node gets the stock denial.
    pub fn deny(mut self, nodes: &[&str]) -> Self {
        for n in nodes {
            self.profile.answers.remove(*n);
        }
        self
    }

    pub fn reply(mut self, node: &str, text: &str) -> Self {
        self.profile.answers.insert(node.to_string(), text.to_string());
        self
    }

    pub fn vague(mut self, node: &str, times: u32) -> Self {
        self.profile.ambiguity.insert(node.to_string(), times);
        self
    }

    pub fn stall(mut self, n: u32) -> Self {
        self.profile.forced_choice_policy = ForcedChoicePolicy::StallNTimes { n };
        self
    }

    pub fn pick(mut self, node: &str, choice: Choice) -> Self {
        self.profile.forced_choice.insert(node.to_string(), choice);
        self
    }

    pub fn case(mut self) -> Self {
        self.profile.label_per_module.insert(self.module, Label::Case);
        self
    }

    pub fn build(self) -> PersonaProfile {
        self.profile
    }
}

fn p(name: &str, module: ModuleTag) -> PersonaBuilder {
    PersonaBuilder::new(name, module)
}

/// A fully symptomatic persona for the module.
pub fn positive(module: ModuleTag) -> PersonaProfile {
    p(&format!("{}-positive", module.as_str()), module).affirm_all().case().build()
}

/// One persona per rule clause, each missing exactly that clause.
pub fn clause_knockouts(module: ModuleTag) -> Vec<PersonaProfile> {
    let m = module.as_str();
    let knock = |suffix: &str, nodes: &[&str]| p(&format!("{m}-knockout-{suffix}"), module).affirm_all().deny(nodes).build();
    match module {
        ModuleTag::Depression => vec![
            knock("count", &["ra3c", "ra3d", "ra3e", "ra3f", "ra3g"]),
            knock("core", &["a1a", "a2a"]),
            knock("impairment", &["ra4"]),
        ],
        ModuleTag::GeneralizedAnxiety => vec![
            knock("core", &["N2"]),
            knock("count", &["N3a", "N3b", "N3c", "N3d"]),
        ],
        ModuleTag::SocialAnxiety => vec![knock("core", &["F3"]), knock("impairment", &["F5"])],
        ModuleTag::Suicide => vec![knock("any", &["b1a"])],
    }
}

/// The canonical set: one positive and one clause-knockout persona per disorder.
pub fn canonical_personas() -> Vec<PersonaProfile> {
    ModuleTag::ALL
        .iter()
        .flat_map(|&m| [positive(m), clause_knockouts(m).remove(0)])
        .collect()
}

fn depression() -> Vec<PersonaProfile> {
    use ModuleTag::Depression as D;
    vec![
        p("depression-case-1", D).affirm_all().case().build(),
        p("depression-case-2", D).affirm_all().deny(&["ra3c", "ra3d", "ra3e"]).case().build(),
        p("depression-case-3", D).affirm_all().deny(&["a1a"]).case().build(),
        p("depression-case-4", D).affirm_all().vague("a2a", 2).vague("ra3d", 2).case().build(),
        p("depression-case-5", D).affirm_all().vague("ra3f", 5).case().build(),
        p("depression-control-1", D).build(),
        p("depression-control-2", D)
            .affirm_all()
            .deny(&["ra3c", "ra3d", "ra3e", "ra3f", "ra3g"])
            .build(),
        p("depression-control-3", D).affirm_all().deny(&["a1a", "a2a"]).build(),
        p("depression-control-4", D).affirm_all().deny(&["ra4"]).build(),
        p("depression-control-5", D).affirm_all().deny(&["A2b"]).build(),
    ]
}

fn generalized_anxiety() -> Vec<PersonaProfile> {
    use ModuleTag::GeneralizedAnxiety as G;
    vec![
        p("gad-case-1", G).affirm_all().case().build(),
        p("gad-case-2", G).affirm_all().deny(&["N3a", "N3b", "N3c"]).case().build(),
        p("gad-case-3", G).affirm_all().deny(&["N4"]).case().build(),
        p("gad-case-4", G).affirm_all().vague("N2", 3).case().build(),
        p("gad-case-5", G).affirm_all().vague("N3d", 5).stall(1).case().build(),
        p("gad-control-1", G).build(),
        p("gad-control-2", G).affirm_all().deny(&["N2"]).build(),
        p("gad-control-3", G).affirm_all().deny(&["N1c"]).build(),
        p("gad-control-4", G).affirm_all().deny(&["N3a", "N3b", "N3c", "N3d"]).build(),
        p("gad-control-5", G)
            .affirm_all()
            .reply("N1b", "It feels like it has gone on for a long time, but really only about two weeks.")
            .build(),
    ]
}

fn social_anxiety() -> Vec<PersonaProfile> {
    use ModuleTag::SocialAnxiety as S;
    vec![
        p("social-case-1", S).affirm_all().case().build(),
        p("social-case-2", S).affirm_all().vague("F3", 2).case().build(),
        p("social-case-3", S).affirm_all().vague("F4", 5).case().build(),
        p("social-case-4", S).affirm_all().vague("F1a", 1).vague("F5", 1).case().build(),
        p("social-case-5", S).affirm_all().vague("F1", 4).case().build(),
        p("social-control-1", S).build(),
        p("social-control-2", S).affirm_all().deny(&["F1"]).build(),
        p("social-control-3", S).affirm_all().deny(&["F3"]).build(),
        p("social-control-4", S).affirm_all().deny(&["F4"]).build(),
        p("social-control-5", S).affirm_all().deny(&["F5"]).build(),
    ]
}

fn suicide() -> Vec<PersonaProfile> {
    use ModuleTag::Suicide as R;
    vec![
        p("suicide-case-1", R).affirm_all().case().build(),
        p("suicide-case-2", R).affirm_all().deny(&["b17a", "b18c"]).case().build(),
        p("suicide-case-3", R).affirm_all().deny(&["b18c"]).case().build(),
        p("suicide-case-4", R).affirm_all().deny(&["b17a"]).case().build(),
        p("suicide-case-5", R).affirm_all().vague("b17a", 2).case().build(),
        p("suicide-control-1", R).build(),
        p("suicide-control-2", R).vague("b1a", 2).build(),
        p("suicide-control-3", R).vague("b1a", 5).pick("b1a", Choice::B).build(),
        p("suicide-control-4", R).vague("b1a", 5).stall(3).build(),
        p("suicide-control-5", R).reply("b1a", "Never, I have not had thoughts like that.").build(),
    ]
}

/// Forty personas, five cases and five controls per disorder, each labeled for
/// all four modules.
pub fn rule_faithful_cohort() -> Vec<PersonaProfile> {
    let mut out = depression();
    out.extend(generalized_anxiety());
    out.extend(social_anxiety());
    out.extend(suicide());
    out
}
