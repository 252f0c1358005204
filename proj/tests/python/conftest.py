import json
import os
import subprocess

import pytest

BEFORE = """#include <string.h>

char *copy_name(const char *src, int n)
{
    char *dst = malloc(n);
    if (!dst)
        return 0;
    strcpy(dst, src);
    return dst;
}
"""

AFTER = BEFORE.replace("    strcpy(dst, src);\n", "    strncpy(dst, src, n - 1);\n    dst[n - 1] = 0;\n")

STUB_ANSWER = "vulnerability logic: src may be longer than n\nvulnerable lines : [5, 8]"


def git(repo, *args, env=None):
    return subprocess.run(["git", "-C", str(repo), *args], check=True, capture_output=True, text=True,
                          env=env).stdout.strip()


@pytest.fixture(scope="session")
def tiny_repo(tmp_path_factory):
    """Three commits: the function, an unrelated edit, the fix. Tags v1 and v2."""
    root = tmp_path_factory.mktemp("repo")
    git(root, "init", "-q", "-b", "main")
    env = dict(os.environ, GIT_AUTHOR_NAME="Fixture Author", GIT_AUTHOR_EMAIL="author@example.org",
               GIT_COMMITTER_NAME="Fixture Author", GIT_COMMITTER_EMAIL="author@example.org")
    ids = []
    steps = [("name.c", BEFORE, "add copy_name"), ("README", "names\n", "readme"), ("name.c", AFTER, "bound the copy")]
    for i, (path, content, msg) in enumerate(steps):
        (root / path).write_text(content)
        stamp = f"{1600000000 + 3600 * i} +0000"
        env.update(GIT_AUTHOR_DATE=stamp, GIT_COMMITTER_DATE=stamp)
        git(root, "add", path, env=env)
        git(root, "commit", "-q", "-m", msg, env=env)
        ids.append(git(root, "rev-parse", "HEAD"))
    git(root, "tag", "v1", ids[1])
    git(root, "tag", "v2", ids[2])
    stub = root.parent / "stub.json"
    stub.write_text(json.dumps({"CVE-2099-0009": STUB_ANSWER}))
    return {"path": str(root), "ids": ids, "stub": str(stub)}
