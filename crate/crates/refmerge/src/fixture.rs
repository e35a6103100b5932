//! Scripted repositories with fixed signatures and timestamps, so the same
//! script always produces the same commit ids.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use git2::{IndexEntry, IndexTime, Oid, Repository, RepositoryInitOptions, Signature, Time};
use refmerge_core::effort::Snapshot;
use refmerge_core::refactoring::{RefactoringRecord, RefactoringType};
use refmerge_core::Sha;

use crate::error::{Error, Result};
use crate::git::{oid_to_sha, sha_to_oid};

const EPOCH: i64 = 1_600_000_000;

pub struct FixtureRepo {
    repo: Repository,
    path: PathBuf,
    tick: i64,
}

impl FixtureRepo {
    /// Creates an empty repository whose HEAD points at `refs/heads/main`.
    pub fn init(path: &Path) -> Result<FixtureRepo> {
        let mut opts = RepositoryInitOptions::new();
        opts.initial_head("main");
        let repo = Repository::init_opts(path, &opts)?;
        Ok(FixtureRepo { repo, path: path.to_path_buf(), tick: 0 })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn repo(&self) -> &Repository {
        &self.repo
    }

    fn signature(&mut self) -> Result<Signature<'static>> {
        self.tick += 1;
        Ok(Signature::new("Fixture Author", "fixture@example.com", &Time::new(EPOCH + 60 * self.tick, 0))?)
    }

    fn write_tree(&self, files: &Snapshot) -> Result<Oid> {
        let mut index = git2::Index::new()?;
        for (path, content) in files {
            let id = self.repo.blob(content)?;
            index.add(&IndexEntry {
                ctime: IndexTime::new(0, 0),
                mtime: IndexTime::new(0, 0),
                dev: 0,
                ino: 0,
                mode: 0o100644,
                uid: 0,
                gid: 0,
                file_size: content.len() as u32,
                id,
                flags: path.len().min(0xfff) as u16,
                flags_extended: 0,
                path: path.as_bytes().to_vec(),
            })?;
        }
        Ok(index.write_tree_to(&self.repo)?)
    }

    /// Commits the full tree `files` on top of `parents`. No ref moves.
    pub fn commit(&mut self, parents: &[Sha], files: &Snapshot, message: &str) -> Result<Sha> {
        let sig = self.signature()?;
        let tree = self.repo.find_tree(self.write_tree(files)?)?;
        let parents =
            parents.iter().map(|p| self.repo.find_commit(sha_to_oid(p))).collect::<std::result::Result<Vec<_>, _>>()?;
        let parent_refs: Vec<&git2::Commit> = parents.iter().collect();
        let oid = self.repo.commit(None, &sig, &sig, message, &tree, &parent_refs)?;
        Ok(oid_to_sha(oid))
    }

    /// Three-way merges `ours` and `theirs` with libgit2. Returns `None` when
    /// the merge conflicts.
    pub fn auto_merge(&mut self, ours: Sha, theirs: Sha, message: &str) -> Result<Option<Sha>> {
        let sig = self.signature()?;
        let a = self.repo.find_commit(sha_to_oid(&ours))?;
        let b = self.repo.find_commit(sha_to_oid(&theirs))?;
        let mut index = self.repo.merge_commits(&a, &b, None)?;
        if index.has_conflicts() {
            return Ok(None);
        }
        let tree = self.repo.find_tree(index.write_tree_to(&self.repo)?)?;
        let oid = self.repo.commit(None, &sig, &sig, message, &tree, &[&a, &b])?;
        Ok(Some(oid_to_sha(oid)))
    }

    pub fn set_branch(&self, name: &str, target: Sha) -> Result<()> {
        self.repo.reference(&format!("refs/heads/{name}"), sha_to_oid(&target), true, "fixture")?;
        Ok(())
    }

    pub fn snapshot(&self, commit: Sha) -> Result<Snapshot> {
        let tree = self.repo.find_commit(sha_to_oid(&commit))?.tree()?;
        let mut out = Snapshot::new();
        let mut failure = None;
        tree.walk(git2::TreeWalkMode::PreOrder, |dir, entry| {
            if entry.kind() == Some(git2::ObjectType::Blob) {
                match self.repo.find_blob(entry.id()) {
                    Ok(blob) => {
                        out.insert(format!("{dir}{}", entry.name().unwrap_or_default()), blob.content().to_vec());
                    }
                    Err(e) => {
                        failure = Some(e);
                        return git2::TreeWalkResult::Abort;
                    }
                }
            }
            git2::TreeWalkResult::Ok
        })?;
        match failure {
            Some(e) => Err(e.into()),
            None => Ok(out),
        }
    }
}

fn clean_merge(fx: &mut FixtureRepo, ours: Sha, theirs: Sha, name: &str) -> Result<Sha> {
    fx.auto_merge(ours, theirs, name)?
        .ok_or_else(|| Error::Integrity(format!("fixture merge {name:?} unexpectedly conflicted")))
}

pub fn snapshot<'a>(files: impl IntoIterator<Item = (&'a str, &'a str)>) -> Snapshot {
    files.into_iter().map(|(p, c)| (p.to_string(), c.as_bytes().to_vec())).collect()
}

pub fn lines(items: &[&str]) -> String {
    items.iter().map(|l| format!("{l}\n")).collect()
}

/// Hand-built merges covering each effort and classification case.
pub struct EffortFixtures {
    /// Disjoint files, merged by libgit2.
    pub disjoint: Sha,
    /// Same file, different regions, merged by libgit2.
    pub same_file: Sha,
    /// Conflict resolved to a line neither side wrote.
    pub novel_resolution: Sha,
    /// Conflict resolved by keeping one side.
    pub one_side: Sha,
    pub octopus: Sha,
    pub no_fast_forward: Sha,
}

/// Builds [`EffortFixtures`] as a chain of merges on `main`.
pub fn build_effort_fixtures(path: &Path) -> Result<(FixtureRepo, EffortFixtures)> {
    let mut fx = FixtureRepo::init(path)?;
    let ten: Vec<String> = (1..=10).map(|i| format!("line {i}")).collect();
    let ten: Vec<&str> = ten.iter().map(String::as_str).collect();
    let shared = lines(&ten);
    let root = fx.commit(&[], &snapshot([("src/shared.txt", shared.as_str()), ("README", "fixture\n")]), "root")?;
    let mut tree = fx.snapshot(root)?;

    // (a) each side adds its own file
    let mut left = tree.clone();
    left.insert("src/Left.java".into(), lines(&["class Left {", "  void a() {}", "}"]).into_bytes());
    let mut right = tree.clone();
    right.insert("src/Right.java".into(), lines(&["class Right {", "  void b() {}", "}"]).into_bytes());
    let p1 = fx.commit(&[root], &left, "add Left")?;
    let p2 = fx.commit(&[root], &right, "add Right")?;
    let disjoint = clean_merge(&mut fx, p1, p2, "merge disjoint")?;
    tree = fx.snapshot(disjoint)?;

    // (b) both edit the shared file, far apart
    let edit = |tree: &Snapshot, at: usize, text: &str| {
        let mut t = tree.clone();
        let mut ls: Vec<String> = String::from_utf8_lossy(&t["src/shared.txt"]).lines().map(str::to_string).collect();
        ls.insert(at, text.to_string());
        t.insert("src/shared.txt".into(), lines(&ls.iter().map(String::as_str).collect::<Vec<_>>()).into_bytes());
        t
    };
    let p1 = fx.commit(&[disjoint], &edit(&tree, 1, "void top() {}"), "top method")?;
    let p2 = fx.commit(&[disjoint], &edit(&tree, 9, "void bottom() {}"), "bottom method")?;
    let same_file = clean_merge(&mut fx, p1, p2, "merge same file")?;
    tree = fx.snapshot(same_file)?;

    // (c) and (d) both sides rewrite one line of conflict.txt
    let with_conflict_file = |tree: &Snapshot, middle: &str| {
        let mut t = tree.clone();
        t.insert("src/conflict.txt".into(), lines(&["a", middle, "c"]).into_bytes());
        t
    };
    let base = fx.commit(&[same_file], &with_conflict_file(&tree, "b"), "add conflict.txt")?;
    let p1 = fx.commit(&[base], &with_conflict_file(&tree, "B1"), "B1")?;
    let p2 = fx.commit(&[base], &with_conflict_file(&tree, "B2"), "B2")?;
    if fx.auto_merge(p1, p2, "probe")?.is_some() {
        return Err(Error::Integrity("conflict fixture merged cleanly".into()));
    }
    let novel_resolution = fx.commit(&[p1, p2], &with_conflict_file(&tree, "B3"), "resolve to B3")?;

    let p1 = fx.commit(&[novel_resolution], &with_conflict_file(&tree, "C1"), "C1")?;
    let p2 = fx.commit(&[novel_resolution], &with_conflict_file(&tree, "C2"), "C2")?;
    let one_side = fx.commit(&[p1, p2], &with_conflict_file(&tree, "C1"), "resolve keeping C1")?;
    tree = fx.snapshot(one_side)?;

    // (e) three independent branches
    let mut tips = Vec::new();
    for name in ["x", "y", "z"] {
        let mut t = tree.clone();
        t.insert(format!("src/{name}.txt"), format!("{name}\n").into_bytes());
        tips.push(fx.commit(&[one_side], &t, name)?);
    }
    for name in ["x", "y", "z"] {
        tree.insert(format!("src/{name}.txt"), format!("{name}\n").into_bytes());
    }
    let octopus = fx.commit(&tips, &tree, "octopus")?;

    // --no-ff: the first parent is an ancestor of the second
    let mut t = tree.clone();
    t.insert("src/feature.txt".into(), b"feature\n".to_vec());
    let feature = fx.commit(&[octopus], &t, "feature")?;
    let no_fast_forward = fx.commit(&[octopus, feature], &t, "merge --no-ff feature")?;

    fx.set_branch("main", no_fast_forward)?;
    Ok((fx, EffortFixtures { disjoint, same_file, novel_resolution, one_side, octopus, no_fast_forward }))
}

/// Hand-built merges, one per classification outcome.
pub struct ClassificationFixtures {
    pub valid: Sha,
    pub no_fast_forward: Sha,
    pub octopus: Sha,
    /// Merge of two histories with disjoint roots.
    pub unrelated: Sha,
    /// Merge with two best common ancestors.
    pub criss_cross: Sha,
    pub criss_cross_bases: [Sha; 2],
}

pub fn build_classification_fixtures(path: &Path) -> Result<(FixtureRepo, ClassificationFixtures)> {
    let mut fx = FixtureRepo::init(path)?;
    let add = |t: &Snapshot, file: &str| {
        let mut t = t.clone();
        t.insert(file.to_string(), format!("{file}\n").into_bytes());
        t
    };
    let root_tree = snapshot([("README", "root\n")]);
    let root = fx.commit(&[], &root_tree, "root")?;

    let a = fx.commit(&[root], &add(&root_tree, "a"), "a")?;
    let b = fx.commit(&[root], &add(&root_tree, "b"), "b")?;
    let valid = clean_merge(&mut fx, a, b, "diverged")?;
    let t = fx.snapshot(valid)?;

    let f = fx.commit(&[valid], &add(&t, "f"), "f")?;
    let no_fast_forward = fx.commit(&[valid, f], &add(&t, "f"), "merge --no-ff")?;
    let t = fx.snapshot(no_fast_forward)?;

    let x = fx.commit(&[no_fast_forward], &add(&t, "x"), "x")?;
    let y = fx.commit(&[no_fast_forward], &add(&t, "y"), "y")?;
    let z = fx.commit(&[no_fast_forward], &add(&t, "z"), "z")?;
    let octopus = fx.commit(&[x, y, z], &add(&add(&add(&t, "x"), "y"), "z"), "octopus")?;
    let t = fx.snapshot(octopus)?;

    let orphan = fx.commit(&[], &snapshot([("vendor", "vendor\n")]), "orphan")?;
    let unrelated = fx.commit(&[octopus, orphan], &add(&t, "vendor"), "unrelated")?;
    let t = fx.snapshot(unrelated)?;

    let c1 = fx.commit(&[unrelated], &add(&t, "c1"), "c1")?;
    let c2 = fx.commit(&[unrelated], &add(&t, "c2"), "c2")?;
    let m1 = clean_merge(&mut fx, c1, c2, "cross 1")?;
    let m2 = clean_merge(&mut fx, c2, c1, "cross 2")?;
    let d1 = fx.commit(&[m1], &add(&fx.snapshot(m1)?, "d1"), "d1")?;
    let d2 = fx.commit(&[m2], &add(&fx.snapshot(m2)?, "d2"), "d2")?;
    let criss_cross = clean_merge(&mut fx, d1, d2, "criss-cross")?;

    fx.set_branch("main", criss_cross)?;
    let mut bases = [c1, c2];
    bases.sort();
    Ok((
        fx,
        ClassificationFixtures { valid, no_fast_forward, octopus, unrelated, criss_cross, criss_cross_bases: bases },
    ))
}

/// Refactorings attached deterministically to the non-merge commits of a
/// repository: 0 to 14 per commit depending on the commit id.
pub fn synthetic_records(repo: &Repository) -> Result<Vec<RefactoringRecord>> {
    let head = crate::git::default_head(repo)?;
    let mut walk = repo.revwalk()?;
    walk.push(sha_to_oid(&head))?;
    let mut commits = Vec::new();
    for oid in walk {
        let commit = repo.find_commit(oid?)?;
        if commit.parent_count() <= 1 {
            commits.push(oid_to_sha(commit.id()));
        }
    }
    commits.sort();
    let mut out = Vec::new();
    for sha in commits {
        let b = sha.as_bytes();
        let n = match b[0] % 4 {
            0 => 0,
            1 | 2 => 1 + (b[1] % 5) as usize,
            _ => 10 + (b[1] % 5) as usize,
        };
        for i in 0..n {
            let kind = RefactoringType::ALL[(b[2] as usize + i) % RefactoringType::ALL.len()];
            out.push(RefactoringRecord { commit: sha, kind, description: format!("{kind} #{i} in {}", sha.short()) });
        }
    }
    Ok(out)
}

/// Parameters of [`build_demo_repo`].
#[derive(Debug, Clone, Copy)]
pub struct DemoShape {
    pub merges: usize,
    /// Varies branch lengths and merge kinds between repositories.
    pub salt: usize,
}

/// A history of `shape.merges` merges of varied kinds on `main`: clean
/// merges, conflicts resolved in different ways, `--no-ff` merges, an
/// octopus and a criss-cross.
pub fn build_demo_repo(path: &Path, shape: DemoShape) -> Result<FixtureRepo> {
    let mut fx = FixtureRepo::init(path)?;
    let body: Vec<String> = (0..40).map(|i| format!("    int f{i}() {{ return {i}; }}")).collect();
    let mut files = BTreeMap::new();
    files.insert("src/Core.java".to_string(), lines(&body.iter().map(String::as_str).collect::<Vec<_>>()).into_bytes());
    let mut main = fx.commit(&[], &files, "initial import")?;

    let mut criss_cross = true;
    for i in 0..shape.merges {
        let tree = fx.snapshot(main)?;
        let kind = (i * 7 + shape.salt) % 6;
        let len1 = 1 + (i + shape.salt) % 3;
        let len2 = 1 + (i * 3 + shape.salt) % 4;

        let grow =
            |fx: &mut FixtureRepo, from: Sha, tree: &Snapshot, side: &str, n: usize| -> Result<(Sha, Snapshot)> {
                let mut tip = from;
                let mut t = tree.clone();
                for k in 0..n {
                    let file = format!("src/{side}{i}.java");
                    let mut content = t.get(&file).cloned().unwrap_or_default();
                    content.extend_from_slice(format!("    void m{k}() {{ /* {side} {i} */ }}\n").as_bytes());
                    t.insert(file, content);
                    tip = fx.commit(&[tip], &t, &format!("{side} {i}.{k}"))?;
                }
                Ok((tip, t))
            };

        main = match kind {
            // clean merge of disjoint work
            0 | 1 => {
                let (p1, _) = grow(&mut fx, main, &tree, "Left", len1)?;
                let (p2, _) = grow(&mut fx, main, &tree, "Right", len2)?;
                clean_merge(&mut fx, p1, p2, &format!("merge {i}"))?
            }
            // conflicting edit of one shared line, resolved to new text
            2 | 3 => {
                let edit = |t: &Snapshot, text: &str| {
                    let mut t = t.clone();
                    let mut ls: Vec<String> =
                        String::from_utf8_lossy(&t["src/Core.java"]).lines().map(str::to_string).collect();
                    ls[i % 40] = text.to_string();
                    t.insert(
                        "src/Core.java".into(),
                        lines(&ls.iter().map(String::as_str).collect::<Vec<_>>()).into_bytes(),
                    );
                    t
                };
                let (a, ta) = grow(&mut fx, main, &tree, "Left", len1)?;
                let (b, tb) = grow(&mut fx, main, &tree, "Right", len2)?;
                let p1 = fx.commit(&[a], &edit(&ta, &format!("    int f{i}() {{ return -1; }}")), "left edit")?;
                let p2 = fx.commit(&[b], &edit(&tb, &format!("    int f{i}() {{ return -2; }}")), "right edit")?;
                let mut resolved = ta.clone();
                resolved.extend(tb.iter().filter(|(k, _)| !ta.contains_key(*k)).map(|(k, v)| (k.clone(), v.clone())));
                let text = if kind == 2 {
                    format!("    int f{i}() {{ return -3; }}")
                } else {
                    format!("    int f{i}() {{ return -1; }}")
                };
                let mut resolved = edit(&resolved, &text);
                if kind == 2 {
                    for extra in 0..(i % 4) * 5 {
                        let mut c = resolved["src/Core.java"].clone();
                        c.extend_from_slice(format!("    // resolution note {i}.{extra}\n").as_bytes());
                        resolved.insert("src/Core.java".into(), c);
                    }
                }
                fx.commit(&[p1, p2], &resolved, &format!("resolve {i}"))?
            }
            // merge commit where fast-forward was possible
            4 => {
                let (p2, t) = grow(&mut fx, main, &tree, "Feature", len2)?;
                fx.commit(&[main, p2], &t, &format!("merge --no-ff {i}"))?
            }
            // octopus and criss-cross, alternating
            _ => {
                criss_cross = !criss_cross;
                if criss_cross {
                    let (x, _) = grow(&mut fx, main, &tree, "CrissX", 1)?;
                    let (y, _) = grow(&mut fx, main, &tree, "CrissY", 1)?;
                    let mx = clean_merge(&mut fx, x, y, "cross 1")?;
                    let my = clean_merge(&mut fx, y, x, "cross 2")?;
                    let tx = fx.snapshot(mx)?;
                    let ty = fx.snapshot(my)?;
                    let (p1, _) = grow(&mut fx, mx, &tx, "CrossA", len1)?;
                    let (p2, _) = grow(&mut fx, my, &ty, "CrossB", len2)?;
                    clean_merge(&mut fx, p1, p2, &format!("criss-cross {i}"))?
                } else {
                    let (x, _) = grow(&mut fx, main, &tree, "OctoX", 1)?;
                    let (y, _) = grow(&mut fx, main, &tree, "OctoY", 1)?;
                    let (z, tz) = grow(&mut fx, main, &tree, "OctoZ", 1)?;
                    let mut all = fx.snapshot(x)?;
                    all.extend(fx.snapshot(y)?);
                    all.extend(tz);
                    fx.commit(&[x, y, z], &all, &format!("octopus {i}"))?
                }
            }
        };
    }
    if shape.merges >= 12 {
        // git merge --allow-unrelated-histories
        let vendor = snapshot([("vendor/NOTICE", "imported\n")]);
        let orphan = fx.commit(&[], &vendor, "unrelated history")?;
        let mut t = fx.snapshot(main)?;
        t.extend(vendor);
        main = fx.commit(&[main, orphan], &t, "merge unrelated history")?;
    }
    fx.set_branch("main", main)?;
    Ok(fx)
}

/// Writes a small demo corpus (three repositories plus a refactoring record
/// file with a few out-of-taxonomy lines) under `dir`.
pub fn build_demo_corpus(dir: &Path) -> Result<(Vec<PathBuf>, PathBuf)> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut repos = Vec::new();
    let mut text = String::new();
    for (name, shape) in [
        ("alpha", DemoShape { merges: 36, salt: 0 }),
        ("beta", DemoShape { merges: 30, salt: 1 }),
        ("gamma", DemoShape { merges: 24, salt: 4 }),
    ] {
        let path = dir.join(name);
        let fx = build_demo_repo(&path, shape)?;
        let records = synthetic_records(fx.repo())?;
        let mut buf = Vec::new();
        refmerge_core::refactoring::write_refactoring_records(&mut buf, &records).map_err(|e| Error::io(dir, e))?;
        text.push_str(&String::from_utf8(buf).expect("records are UTF-8"));
        if let Some(first) = records.first() {
            text.push_str(&format!(
                "{{\"commit\":\"{}\",\"type\":\"Extract And Move Method\",\"description\":\"outside the studied types\"}}\n",
                first.commit
            ));
        }
        repos.push(path);
    }
    let records_path = dir.join("refactorings.jsonl");
    std::fs::write(&records_path, text).map_err(|e| Error::io(&records_path, e))?;
    Ok((repos, records_path))
}
