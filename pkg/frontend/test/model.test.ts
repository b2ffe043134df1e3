import assert from "node:assert/strict";
import { test } from "node:test";

import { CanvasTopology, canonicalDocumentText } from "../src/model.js";

function diamond(): CanvasTopology {
  const topo = new CanvasTopology();
  for (const label of ["C0", "R1", "R2", "R3", "R4", "P1"]) topo.addNode(0, 0, label);
  topo.addEdge(0, 1, 1);
  topo.addEdge(1, 2, 20);
  topo.addEdge(1, 3, 5);
  topo.addEdge(2, 4, 20);
  topo.addEdge(3, 4, 5);
  topo.addEdge(4, 5, 1);
  return topo;
}

test("canonical text has fixed key order and compact separators", () => {
  const topo = new CanvasTopology();
  topo.addNode(0, 0, "A");
  topo.addNode(10, 10, "B");
  topo.addEdge(0, 1, 3);
  assert.equal(
    topo.canonicalText(),
    '{"labels":["A","B"],"matrix":[[null,3],[3,null]],"media":[[null,"wired"],["wired",null]]}',
  );
});

test("integral delays render as integers, fractional stay fractional", () => {
  const topo = new CanvasTopology();
  topo.addNode(0, 0, "A");
  topo.addNode(1, 1, "B");
  topo.addNode(2, 2, "C");
  topo.addEdge(0, 1, 5.0);
  topo.addEdge(1, 2, 2.5);
  const text = topo.canonicalText();
  assert.match(text, /\[null,5,null\]/);
  assert.match(text, /2\.5/);
  assert.doesNotMatch(text, /5\.0/);
});

test("document round trip preserves the canonical bytes", () => {
  const original = diamond();
  const text = original.canonicalText();
  const again = CanvasTopology.fromDocument(JSON.parse(text));
  assert.equal(again.canonicalText(), text);
  assert.equal(again.dirty, false);
});

test("edits flip the dirty flag and validation catches bad delays", () => {
  const topo = diamond();
  topo.dirty = false;
  topo.updateEdge(0, -4);
  assert.equal(topo.dirty, true);
  const issues = topo.validate();
  assert.equal(issues.length, 1);
  assert.equal(issues[0]!.edge, 0);
  assert.equal(topo.canDeploy(), false);
  topo.updateEdge(0, 2);
  assert.equal(topo.canDeploy(), true);
});

test("empty canvas cannot deploy", () => {
  assert.equal(new CanvasTopology().canDeploy(), false);
});

test("duplicate labels and self links are rejected", () => {
  const topo = new CanvasTopology();
  topo.addNode(0, 0, "A");
  assert.throws(() => topo.addNode(5, 5, "A"), /duplicate/);
  topo.addNode(5, 5, "B");
  assert.throws(() => topo.addEdge(0, 0, 1), /self/);
  topo.addEdge(0, 1, 1);
  assert.throws(() => topo.addEdge(1, 0, 2), /already/);
});

test("wireless media survives the round trip", () => {
  const topo = new CanvasTopology();
  topo.addNode(0, 0, "A");
  topo.addNode(1, 1, "B");
  topo.addEdge(0, 1, 7, "wireless");
  const doc = JSON.parse(topo.canonicalText());
  assert.equal(doc.media[0][1], "wireless");
  const again = CanvasTopology.fromDocument(doc);
  assert.equal(again.edges[0]!.medium, "wireless");
});

test("canonicalDocumentText defaults missing media to wired", () => {
  const text = canonicalDocumentText({
    labels: ["A", "B"],
    matrix: [
      [null, 2],
      [2, null],
    ],
  });
  assert.match(text, /"media":\[\[null,"wired"\],\["wired",null\]\]/);
});

test("edgeKey uses the endpoint labels in index order", () => {
  const topo = diamond();
  assert.equal(topo.edgeKey(4), "R3-R4");
});
