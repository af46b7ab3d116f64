// Word-level diff of two draft revisions (LCS-based), for side-by-side compare.

export interface DiffOp {
  kind: "same" | "added" | "removed";
  word: string;
}

export function wordDiff(before: string, after: string): DiffOp[] {
  const a = before.split(/\s+/).filter(Boolean);
  const b = after.split(/\s+/).filter(Boolean);
  const rows = a.length + 1;
  const cols = b.length + 1;
  const table = new Array<number>(rows * cols).fill(0);
  for (let i = a.length - 1; i >= 0; i--) {
    for (let j = b.length - 1; j >= 0; j--) {
      table[i * cols + j] = a[i] === b[j]
        ? table[(i + 1) * cols + j + 1]! + 1
        : Math.max(table[(i + 1) * cols + j]!, table[i * cols + j + 1]!);
    }
  }
  const ops: DiffOp[] = [];
  let i = 0;
  let j = 0;
  while (i < a.length && j < b.length) {
    if (a[i] === b[j]) {
      ops.push({ kind: "same", word: a[i]! });
      i++; j++;
    } else if (table[(i + 1) * cols + j]! >= table[i * cols + j + 1]!) {
      ops.push({ kind: "removed", word: a[i]! });
      i++;
    } else {
      ops.push({ kind: "added", word: b[j]! });
      j++;
    }
  }
  while (i < a.length) ops.push({ kind: "removed", word: a[i++]! });
  while (j < b.length) ops.push({ kind: "added", word: b[j++]! });
  return ops;
}
