//! Seeded synthetic project-metadata generator.
//!
//! Produces rows in the same shape as an OW2/FLOSSmole export. A real
//! export can be ingested in its place.
//!
//! In the `sparse` profile almost every manager runs a single
//! project, so their derived ratings are all 1 and carry no variance for
//! Pearson correlation, while shared labels such as "OS Independent" tie
//! technologies together. One anchor manager (dev 3430) runs five projects
//! with identical labels and so rates each of those technologies 5.

use std::str::FromStr;

use rand::distributions::WeightedIndex;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use crate::error::Error;
use crate::ingest::ProjectRecord;

const AUDIENCES: &[&str] = &[
    "Developers",
    "End Users/Desktop",
    "System Administrators",
    "Information Technology",
    "Science/Research",
    "Education",
    "Telecommunications Industry",
    "Other Audience",
];

const ENVIRONMENTS: &[&str] = &[
    "Web Environment",
    "Win32 (MS Windows)",
    "Console (Text Based)",
    "X11 Applications",
    "Gnome",
    "KDE",
    "No Input/Output (Daemon)",
    "Java Swing",
    "Cocoa (MacOS X)",
    "Handhelds/PDA's",
    "Plugins",
    "Other Environment",
];

const OPERATING_SYSTEMS: &[&str] = &[
    "OS Independent",
    "Linux",
    "All POSIX (Linux/BSD/UNIX-like OSes)",
    "All 32-bit MS Windows (95/98/NT/2000/XP)",
    "Mac OS X",
    "Solaris",
    "FreeBSD",
    "BeOS",
];

const LANGUAGES: &[&str] = &[
    "Java", "C", "C++", "Python", "PHP", "Perl", "JavaScript", "C#", "Ruby", "Tcl",
    "XML-based", "SQL", "Unix Shell", "Scala", "Groovy",
];

const TOPICS: &[&str] = &[
    "Database Engines/Servers",
    "Code Generators",
    "Software Development",
    "Compilers",
    "Testing",
    "Build Tools",
    "Version Control",
    "Bug Tracking",
    "Frameworks",
    "Middleware",
    "Object Brokering",
    "Distributed Computing",
    "Application Servers",
    "Enterprise",
    "ERP",
    "CRM",
    "Workflow",
    "Project Management",
    "Dynamic Content",
    "Security",
    "Cryptography",
    "Networking",
    "Monitoring",
    "Systems Administration",
    "Scientific/Engineering",
    "Visualization",
    "Text Processing",
    "Documentation",
    "Office/Business",
    "Communications",
    "Email",
    "Chat",
    "Multimedia",
    "Games/Entertainment",
    "Graphics",
    "Front-Ends",
    "Interpreters",
    "Libraries",
    "Clustering",
    "Storage",
];

const ANCHOR_DEV: u64 = 3430;
const ANCHOR_LABELS: [&str; 5] = [
    "Developers",
    "Web Environment",
    "OS Independent",
    "Java",
    "Database Engines/Servers",
];
const ANCHOR_PROJECTS: usize = 5;
const FIRST_PROJECT_ID: u64 = 140;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SparsityProfile {
    /// Near-disjoint managers; starves user-based CF.
    Sparse,
    /// Managers with several overlapping projects each.
    Dense,
}

impl FromStr for SparsityProfile {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s {
            "sparse" => Ok(SparsityProfile::Sparse),
            "dense" => Ok(SparsityProfile::Dense),
            other => Err(Error::InvalidArgument(format!("unknown profile {other:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FixtureConfig {
    pub seed: u64,
    pub n_pm_users: usize,
    pub n_projects: usize,
    pub profile: SparsityProfile,
}

impl Default for FixtureConfig {
    fn default() -> Self {
        FixtureConfig {
            seed: 42,
            n_pm_users: 103,
            n_projects: 150,
            profile: SparsityProfile::Sparse,
        }
    }
}

struct Project {
    id: u64,
    audience: &'static str,
    environments: Vec<&'static str>,
    os: &'static str,
    language: &'static str,
    topic: &'static str,
}

/// Zipf-like pick: earlier pool entries are more common.
struct Pool {
    labels: &'static [&'static str],
    weights: WeightedIndex<f64>,
}

impl Pool {
    fn new(labels: &'static [&'static str], skew: f64) -> Self {
        let weights = (0..labels.len()).map(|r| 1.0 / ((r + 1) as f64).powf(skew));
        Pool {
            labels,
            weights: WeightedIndex::new(weights).expect("non-empty label pool"),
        }
    }

    fn pick(&self, rng: &mut ChaCha8Rng) -> &'static str {
        self.labels[self.weights.sample(rng)]
    }
}

fn make_projects(n: usize, rng: &mut ChaCha8Rng) -> Vec<Project> {
    let skew = 0.6;
    let audiences = Pool::new(AUDIENCES, skew);
    let environments = Pool::new(ENVIRONMENTS, skew);
    let systems = Pool::new(OPERATING_SYSTEMS, skew);
    let languages = Pool::new(LANGUAGES, skew);
    let topics = Pool::new(TOPICS, skew);

    (0..n)
        .map(|p| {
            let id = FIRST_PROJECT_ID + p as u64;
            if p < ANCHOR_PROJECTS {
                return Project {
                    id,
                    audience: ANCHOR_LABELS[0],
                    environments: vec![ANCHOR_LABELS[1]],
                    os: ANCHOR_LABELS[2],
                    language: ANCHOR_LABELS[3],
                    topic: ANCHOR_LABELS[4],
                };
            }
            let n_env = match rng.gen_range(0..20) {
                0 => 3,
                1..=3 => 2,
                _ => 1,
            };
            let mut envs = Vec::with_capacity(n_env);
            while envs.len() < n_env {
                let e = environments.pick(rng);
                if !envs.contains(&e) {
                    envs.push(e);
                }
            }
            Project {
                id,
                audience: audiences.pick(rng),
                environments: envs,
                os: systems.pick(rng),
                language: languages.pick(rng),
                topic: topics.pick(rng),
            }
        })
        .collect()
}

fn make_dev_ids(n: usize, rng: &mut ChaCha8Rng) -> Vec<u64> {
    let mut ids = Vec::with_capacity(n);
    if n > 0 {
        ids.push(ANCHOR_DEV);
    }
    while ids.len() < n {
        let id = rng.gen_range(1_000..20_000);
        if !ids.contains(&id) {
            ids.push(id);
        }
    }
    ids
}

fn assign_projects(cfg: &FixtureConfig, rng: &mut ChaCha8Rng) -> Vec<Vec<usize>> {
    let n_proj = cfg.n_projects;
    let anchors = ANCHOR_PROJECTS.min(n_proj);
    // projects open to ordinary managers
    let open: Vec<usize> = if n_proj > anchors { (anchors..n_proj).collect() } else { (0..n_proj).collect() };

    (0..cfg.n_pm_users)
        .map(|u| match cfg.profile {
            SparsityProfile::Sparse => {
                if u == 0 {
                    (0..anchors).collect()
                } else if u <= 4 {
                    // co-managers of the anchor project
                    vec![0]
                } else {
                    let count = if rng.gen_bool(0.1) { rng.gen_range(2..=3) } else { 1 };
                    open.choose_multiple(rng, count.min(open.len())).copied().collect()
                }
            }
            SparsityProfile::Dense => {
                if u == 0 {
                    (0..anchors).collect()
                } else {
                    // draw from a narrow window so managers overlap heavily
                    let window = open.len().min(12);
                    let start = rng.gen_range(0..=open.len() - window);
                    let count = rng.gen_range(4..=8).min(window);
                    open[start..start + window]
                        .choose_multiple(rng, count)
                        .copied()
                        .collect()
                }
            }
        })
        .collect()
}

/// Generates manager/project rows. Deterministic for a given config.
pub fn generate_ow2_like(cfg: &FixtureConfig) -> Vec<ProjectRecord> {
    if cfg.n_pm_users == 0 || cfg.n_projects == 0 {
        return Vec::new();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let projects = make_projects(cfg.n_projects, &mut rng);
    let devs = make_dev_ids(cfg.n_pm_users, &mut rng);
    let assignment = assign_projects(cfg, &mut rng);

    let mut records = Vec::new();
    for (dev, owned) in devs.iter().zip(&assignment) {
        let mut owned = owned.clone();
        owned.sort_unstable();
        for &p in &owned {
            let project = &projects[p];
            for env in &project.environments {
                records.push(ProjectRecord {
                    dev_id: *dev,
                    proj_id: project.id,
                    audience: project.audience.to_owned(),
                    environment: (*env).to_owned(),
                    os_system: project.os.to_owned(),
                    language: project.language.to_owned(),
                    topic: project.topic.to_owned(),
                    preference_count: 5,
                });
            }
        }
    }
    records
}
