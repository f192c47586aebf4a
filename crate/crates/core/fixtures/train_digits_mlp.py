import numpy as np
from sklearn.datasets import load_digits
from sklearn.neural_network import MLPClassifier
from sklearn.model_selection import train_test_split
d=load_digits()
mask=(d.target==0)|(d.target==1)
X=d.data[mask]/16.0; y=d.target[mask]
Xtr,Xte,ytr,yte=train_test_split(X,y,test_size=0.3,random_state=0,stratify=y)
clf=MLPClassifier(hidden_layer_sizes=(64,64),activation='relu',max_iter=2000,random_state=0).fit(Xtr,ytr)
print("test acc",clf.score(Xte,yte))
W=clf.coefs_; B=clf.intercepts_
def f(v): return repr(float(v))
lines=["mlp k=2 layers=3"]
for i,(w,b) in enumerate(zip(W,B)):
    w=w.T
    if i==2:  # single logit -> two scores (0, z)
        w=np.vstack([np.zeros_like(w),w]); b=np.concatenate([[0.0],b])
    act="relu" if i<2 else "identity"
    lines.append(f"layer {w.shape[0]} {w.shape[1]} {act}")
    for r in w: lines.append(" ".join(f(v) for v in r))
    lines.append(" ".join(f(v) for v in b))
open("fixtures/digits01_mlp.txt","w").write("\n".join(lines)+"\n")
pred=clf.predict(Xte)
ok=np.where(pred==yte)[0]
sel=[i for c in (0,1) for i in ok[yte[ok]==c][:10]]
pts=[" ".join(f"{v:.16e}" for v in Xte[i]) for i in sel]
open("fixtures/digits01_points.txt","w").write("\n".join(pts)+"\n")
print([int(yte[i]) for i in sel])
